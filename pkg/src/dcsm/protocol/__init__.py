"""Protocol engine: methods, command streams, sender/receiver state machines."""
from .commands import ControlMessage, code_schedule, rate_command_source
from .engine import BACKENDS, EngineResult, EngineSetup, run_engine, run_kernel, run_reference
from .methods import (
    FOUNTAIN_METHODS,
    METHODS,
    PAPER_METHODS,
    Y_MIN,
    Y_POLICIES,
    MethodSpec,
    YContext,
    compute_y,
    fixed_y,
    genie2_copies,
)
from .state import AduSender, Feedback, FileTransferState, Frame, FountainReceiver, FountainSender, static2_stream

__all__ = [
    "AduSender", "BACKENDS", "ControlMessage", "EngineResult", "EngineSetup", "FOUNTAIN_METHODS", "Feedback",
    "FileTransferState", "FountainReceiver", "FountainSender", "Frame", "METHODS", "MethodSpec", "PAPER_METHODS",
    "YContext", "Y_MIN", "Y_POLICIES", "code_schedule", "compute_y", "fixed_y", "genie2_copies",
    "rate_command_source", "run_engine", "run_kernel", "run_reference", "static2_stream",
]
