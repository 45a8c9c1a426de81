"""Engine inputs/outputs and the two interchangeable frame loops.

``run_engine(setup, backend="kernel")`` runs the compiled loop;
``backend="reference"`` drives the Python state machines in
:mod:`dcsm.protocol.state`.  Both consume the same pre-drawn uniforms and
return identical :class:`EngineResult` objects.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernel import adu_kernel, fountain_kernel
from .state import AduSender, FountainReceiver, FountainSender

BACKENDS = ("kernel", "reference")


@dataclass
class EngineSetup:
    """Everything a frame loop needs for one pass and one method.

    Attributes
    ----------
    sched : int8 array, one entry per second
        Range index in effect (0 halts transmission).
    fer_table : (n_sec, 5) array
        FER of each range's code at the actual SNR of each second.
    actual_range : int8 array
        Actual range per second (for the correct-code counter).
    ticks_per_second, end_tick, rtt_ticks : int
        Clock in channel bits.
    frame_ticks : (5,) int array
        Channel bits per frame for each range's code (0 for Range A).
    loss_draws, decode_draws : float arrays
        Pre-drawn uniforms; frame ``k`` is lost iff ``loss_draws[k] < fer``.
    fountain : bool
        Fountain transfer (DCSM/genie I/static I) or ADU transfer (genie II/static II).
    y_fixed : int or None
        Pass-wide y; ``None`` selects adaptive sizing with ``adaptive_p``.
    replicate : bool
        Genie II replication (ADU transfer only).
    """

    sched: np.ndarray
    fer_table: np.ndarray
    actual_range: np.ndarray
    ticks_per_second: int
    end_tick: int
    rtt_ticks: int
    frame_ticks: np.ndarray
    loss_draws: np.ndarray
    decode_draws: np.ndarray
    fountain: bool = True
    source_symbols: int = 45005
    overhead: int = 5
    y_fixed: int | None = 453
    adaptive_p: np.ndarray = field(default_factory=lambda: np.ones(5))
    z: float = 0.0
    max_iter: int = 100
    adu_count: int = 44844
    replicate: bool = False
    copies_eps: float = 1e-3
    max_copies: int = 1000

    @property
    def max_frames(self) -> int:
        shortest = int(np.min(self.frame_ticks[1:]))
        return self.end_tick // shortest + 1

    @property
    def max_files(self) -> int:
        per_file = (self.source_symbols + self.overhead) if self.fountain else self.adu_count
        return self.max_frames // max(per_file, 1) + 2


@dataclass
class EngineResult:
    frames_by_code: np.ndarray
    clean_by_code: np.ndarray
    n_files: int
    file_sent: np.ndarray
    file_clean: np.ndarray
    file_lost: np.ndarray
    file_first_tx: np.ndarray
    file_delivery: np.ndarray  # tick, -1 if never delivered
    file_y: np.ndarray  # -1 for ADU methods
    file_requested: np.ndarray
    k_s: int
    feedback_messages: int
    feedback_symbols: int
    halted_seconds: int
    final_tick: int

    @property
    def frames(self) -> int:
        return int(self.frames_by_code.sum())

    @property
    def clean_frames(self) -> int:
        return int(self.clean_by_code.sum())

    @property
    def files_delivered(self) -> int:
        return int(np.count_nonzero(self.file_delivery >= 0))

    def equals(self, other: "EngineResult") -> bool:
        for name in self.__dataclass_fields__:
            a, b = getattr(self, name), getattr(other, name)
            if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if not np.array_equal(np.asarray(a), np.asarray(b)):
                    return False
            elif a != b:
                return False
        return True


def _as_arrays(setup: EngineSetup):
    return (
        np.ascontiguousarray(setup.sched, dtype=np.int8),
        np.ascontiguousarray(setup.fer_table, dtype=np.float64),
        np.ascontiguousarray(setup.actual_range, dtype=np.int8),
        np.ascontiguousarray(setup.frame_ticks, dtype=np.int64),
    )


def _check_draws(setup: EngineSetup):
    if len(setup.loss_draws) < setup.max_frames:
        raise ValueError("not enough loss draws for the pass")
    if setup.fountain and len(setup.decode_draws) == 0:
        raise ValueError("decode draws required")


def run_kernel(setup: EngineSetup) -> EngineResult:
    _check_draws(setup)
    sched, fer_table, actual, frame_ticks = _as_arrays(setup)
    if setup.fountain:
        y_fixed = -1 if setup.y_fixed is None else int(setup.y_fixed)
        (fbc, cbc, n, y, sent, _fresh, clean, lost, req, first, _last, deliv,
         k_s, fb_msgs, fb_syms, halted, now) = fountain_kernel(
            sched, fer_table, actual, int(setup.ticks_per_second), int(setup.end_tick),
            int(setup.rtt_ticks), frame_ticks, np.asarray(setup.loss_draws, np.float64),
            np.asarray(setup.decode_draws, np.float64), int(setup.source_symbols), int(setup.overhead),
            y_fixed, np.asarray(setup.adaptive_p, np.float64), float(setup.z), int(setup.max_iter),
            int(setup.max_files))
        return EngineResult(fbc, cbc, int(n), sent, clean, lost, first, deliv, y, req,
                            int(k_s), int(fb_msgs), int(fb_syms), int(halted), int(now))
    (fbc, cbc, n, sent, clean, _adus, _ok, first, deliv, _complete, k_s, halted, now) = adu_kernel(
        sched, fer_table, actual, int(setup.ticks_per_second), int(setup.end_tick), frame_ticks,
        np.asarray(setup.loss_draws, np.float64), int(setup.adu_count), bool(setup.replicate),
        float(setup.copies_eps), int(setup.max_copies), int(setup.max_files))
    n = int(n)
    return EngineResult(fbc, cbc, n, sent, clean, sent - clean, first, deliv, np.full(n, -1, np.int64),
                        np.zeros(n, np.int64), int(k_s), 0, 0, int(halted), int(now))


def run_reference(setup: EngineSetup) -> EngineResult:
    """Pure-Python frame loop over the sender/receiver state machines."""
    _check_draws(setup)
    sched, fer_table, actual, frame_ticks = _as_arrays(setup)
    tps, end_tick = int(setup.ticks_per_second), int(setup.end_tick)
    frames_by_code = np.zeros(5, np.int64)
    clean_by_code = np.zeros(5, np.int64)
    k_s = halted = fb_msgs = fb_syms = 0

    if setup.fountain:
        sender = FountainSender(setup.source_symbols, setup.overhead, setup.y_fixed,
                                setup.adaptive_p, setup.z, setup.max_iter)
        receiver = FountainReceiver(sender.files, setup.rtt_ticks, setup.decode_draws)
    else:
        sender = AduSender(setup.adu_count, setup.replicate, setup.copies_eps, setup.max_copies)

    now = k = 0
    while True:
        s = now // tps
        if s >= len(sched):
            break
        c = int(sched[s])
        if c == 0:
            halted += 1
            now = (s + 1) * tps
            continue
        dur = int(frame_ticks[c])
        if now + dur > end_tick:
            break
        fer = fer_table[s, c]
        frame = sender.step(now, c, dur) if setup.fountain else sender.step(now, c, dur, fer)
        lost = bool(setup.loss_draws[k] < fer)
        frames_by_code[c] += 1
        if not lost:
            clean_by_code[c] += 1
        if c == actual[s]:
            k_s += 1
        if setup.fountain:
            fb = receiver.step(frame, lost)
            if fb is not None:
                fb_msgs += 1
                fb_syms += fb.extra
                sender.accept_feedback(fb)
        else:
            sender.receive(frame, lost)
        now = frame.end
        k += 1

    files = sender.files
    n = len(files)
    if setup.fountain:
        return EngineResult(
            frames_by_code, clean_by_code, n,
            np.array([f.symbols_sent for f in files], np.int64),
            np.array([f.clean_received for f in files], np.int64),
            np.array([f.lost for f in files], np.int64),
            np.array([f.first_tx for f in files], np.int64),
            np.array([f.delivery for f in files], np.int64),
            np.array([-1 if f.y is None else f.y for f in files], np.int64),
            np.array([f.requested for f in files], np.int64),
            k_s, fb_msgs, fb_syms, halted, now,
        )
    sent = np.array([f.frames_sent for f in files], np.int64)
    clean = np.array([f.clean_frames for f in files], np.int64)
    return EngineResult(
        frames_by_code, clean_by_code, n, sent, clean, sent - clean,
        np.array([f.first_tx for f in files], np.int64),
        np.array([f.delivery for f in files], np.int64),
        np.full(n, -1, np.int64), np.zeros(n, np.int64),
        k_s, 0, 0, halted, now,
    )


def run_engine(setup: EngineSetup, backend: str = "kernel") -> EngineResult:
    if backend == "kernel":
        return run_kernel(setup)
    if backend == "reference":
        return run_reference(setup)
    raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
