"""Rate-selection command streams.

All schedules are expressed in *Earth-arrival* seconds: ``sched[s]`` is
the range index (0 = halt, 1..4 = B..E) governing frames whose leading
edge reaches the station during second ``s``.  A DCSM command issued on
Earth at ``s - RTT`` reaches the spacecraft at ``s - RTT/2`` and its first
frame lands at ``s``; the forecast used for second ``s`` is therefore the
``RTT``-ahead prediction made at ``s - RTT``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..coding import RANGE_CODES, RANGE_IDS, TurboCode, classify_range
from .methods import MethodSpec

HALT = 0
STATIC_RANGE = 4  # Range E code, (8920, 1/2)

KINDS = ("rate_select", "halt", "cts", "feedback")


@dataclass(frozen=True)
class ControlMessage:
    """Uplink message.

    Times are seconds.  ``send_time`` and ``arrival_time`` are on the
    Earth/spacecraft clocks respectively (arrival = send + RTT/2);
    ``effective_time`` is the Earth-arrival second of the first frame it
    governs.  ``code`` is the 2-bit rate selector (range index 1..4).
    """

    kind: str
    send_time: float
    arrival_time: float
    effective_time: float
    code: int | None = None
    file_id: int | None = None
    extra: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown message kind {self.kind!r}")

    @property
    def turbo_code(self) -> TurboCode | None:
        return RANGE_CODES[self.code - 1] if self.code else None


def code_schedule(spec: MethodSpec, actual, predicted=None) -> np.ndarray:
    """Per-second range index in effect for the method."""
    actual = np.asarray(actual, dtype=float)
    if spec.method in ("static1", "static2"):
        return np.full(actual.shape, STATIC_RANGE, dtype=np.int8)
    if spec.method in ("genie1", "genie2"):
        return np.asarray(classify_range(actual), dtype=np.int8)
    if predicted is None:
        raise ValueError("DCSM needs a predicted SNR series")
    predicted = np.asarray(predicted, dtype=float)
    if predicted.shape != actual.shape:
        raise ValueError("predicted and actual series must be aligned")
    return np.asarray(classify_range(predicted), dtype=np.int8)


def rate_command_source(spec: MethodSpec, actual, predicted=None, rtt: float = 1200.0) -> list[ControlMessage]:
    """Edge-triggered control stream that realises :func:`code_schedule`.

    DCSM messages are issued one RTT before they take effect; the genie
    switches on board with no uplink latency; static methods get one
    initial rate command.
    """
    sched = code_schedule(spec, actual, predicted)
    if spec.method in ("static1", "static2"):
        return [ControlMessage("rate_select", 0.0, 0.0, 0.0, code=STATIC_RANGE)]
    lead = float(rtt) if spec.method == "dcsm" else 0.0
    transit = lead / 2.0
    msgs: list[ControlMessage] = []
    prev = None
    for s in np.flatnonzero(np.r_[True, sched[1:] != sched[:-1]]):
        cur = int(sched[s])
        eff = float(s)
        send, arrive = eff - lead, eff - transit
        if cur == HALT:
            msgs.append(ControlMessage("halt", send, arrive, eff))
        else:
            if prev == HALT:
                msgs.append(ControlMessage("cts", send, arrive, eff, code=cur))
            msgs.append(ControlMessage("rate_select", send, arrive, eff, code=cur))
        prev = cur
    return msgs


def describe_schedule(sched) -> str:
    """Compact run-length rendering, e.g. ``E:100 D:20``."""
    sched = np.asarray(sched)
    if sched.size == 0:
        return ""
    edges = np.flatnonzero(np.r_[True, sched[1:] != sched[:-1], True])
    return " ".join(f"{RANGE_IDS[sched[a]]}:{b - a}" for a, b in zip(edges[:-1], edges[1:]))
