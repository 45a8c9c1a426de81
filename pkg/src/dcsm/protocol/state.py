"""
Sender and receiver state machines (pure Python reference semantics).

Clock: integer *ticks* of one channel bit (``1 / R_b`` s) in Earth-arrival
coordinates.  A frame of code ``c`` occupies ``frame_ticks[c]`` ticks, so
frame timing is exact.  Feedback produced when a frame finishes arriving at
``t`` influences frames arriving from ``t + RTT`` on (half an RTT up, half
an RTT back down).

Fountain methods (DCSM, genie I, static I) send files serially.  File ``m``
gets ``K_S + Theta + y_m`` fresh symbols; feedback requests for earlier
files preempt fresh symbols, first come first served.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ._jit import adaptive_y, copies_for, decode_probability

PENDING, DECODED = "pending", "decoded"


@dataclass
class Frame:
    file_id: int
    esi: int  # per-file symbol (or ADU copy) sequence number
    code: int  # range index 1..4
    start: int  # tick
    end: int  # tick
    fresh: bool = True
    y_known: int | None = None  # file's y_m as known when the frame was sent


@dataclass
class FileTransferState:
    file_id: int
    source_symbols: int
    overhead: int
    y: int | None = None
    symbols_sent: int = 0
    fresh_sent: int = 0
    clean_received: int = 0
    lost: int = 0
    requested: int = 0
    decode_status: str = PENDING
    rate_counts: np.ndarray = field(default_factory=lambda: np.zeros(5))
    first_tx: int = -1
    last_tx: int = -1
    delivery: int = -1

    @property
    def target(self) -> int | None:
        """Fresh symbols to send, once y is known."""
        return None if self.y is None else self.source_symbols + self.overhead + self.y

    @property
    def proportions(self) -> np.ndarray:
        total = self.rate_counts.sum()
        return self.rate_counts / total if total else self.rate_counts


@dataclass
class Feedback:
    file_id: int
    extra: int
    effective: int  # tick from which the requested symbols can arrive


class FountainSender:
    """Serial fountain sender with feedback preemption.

    ``y_fixed`` is the pass-wide y; ``None`` switches to the adaptive rule
    where ``y_m`` is sized from the rate mix of the first ``K_S + Theta``
    symbols of the file.
    """

    def __init__(self, source_symbols: int, overhead: int, y_fixed: int | None,
                 adaptive_p=None, z: float = 0.0, max_iter: int = 100):
        self.source_symbols = source_symbols
        self.overhead = overhead
        self.y_fixed = y_fixed
        self.adaptive_p = None if adaptive_p is None else np.asarray(adaptive_p, dtype=float)
        self.z = z
        self.max_iter = max_iter
        self.files: list[FileTransferState] = []
        self.queue: deque[Feedback] = deque()

    def accept_feedback(self, fb: Feedback):
        self.queue.append(fb)

    def _open_file(self) -> FileTransferState:
        f = FileTransferState(len(self.files), self.source_symbols, self.overhead, y=self.y_fixed)
        self.files.append(f)
        return f

    def step(self, now: int, code: int, duration: int) -> Frame:
        """Emit the frame that starts at ``now`` under ``code``."""
        if self.queue and self.queue[0].effective <= now:
            fb = self.queue[0]
            fb.extra -= 1
            if fb.extra == 0:
                self.queue.popleft()
            f = self.files[fb.file_id]
            fresh = False
        else:
            f = self.files[-1] if self.files else None
            if f is None or (f.target is not None and f.fresh_sent >= f.target):
                f = self._open_file()
            fresh = True
        frame = Frame(f.file_id, f.symbols_sent, code, now, now + duration, fresh)
        f.symbols_sent += 1
        if f.first_tx < 0:
            f.first_tx = now
        f.last_tx = now
        if fresh:
            basis = f.source_symbols + f.overhead
            if f.fresh_sent < basis:
                f.rate_counts[code] += 1
            f.fresh_sent += 1
            if f.y is None and f.fresh_sent == basis:
                f.y = int(adaptive_y(f.rate_counts, self.adaptive_p, f.source_symbols, f.overhead,
                                     self.z, self.max_iter))
        frame.y_known = f.y
        return frame


class FountainReceiver:
    """Earth-side bookkeeping; decides losses and emits feedback."""

    def __init__(self, sender_files: list[FileTransferState], rtt_ticks: int, decode_draws):
        self.files = sender_files  # shared per-file records
        self.rtt_ticks = rtt_ticks
        self.decode_draws = np.asarray(decode_draws, dtype=float)
        self.decode_index = 0

    def _decode_draw(self) -> float:
        u = self.decode_draws[self.decode_index % len(self.decode_draws)]
        self.decode_index += 1
        return float(u)

    def step(self, frame: Frame, lost: bool) -> Feedback | None:
        f = self.files[frame.file_id]
        if f.decode_status == DECODED:
            return None
        extra = 0
        if lost:
            f.lost += 1
        else:
            f.clean_received += 1
            if f.clean_received >= f.source_symbols + f.overhead:
                if self._decode_draw() < decode_probability(f.clean_received, f.source_symbols):
                    f.decode_status = DECODED
                    f.delivery = frame.end
                    return None
                # unlucky decode: ask for one more symbol
                extra = 1
                f.requested += 1
        if frame.y_known is not None:
            deficit = f.lost - frame.y_known - f.requested
            if deficit > 0:
                extra += deficit
                f.requested += deficit
        if extra > 0:
            return Feedback(f.file_id, extra, frame.end + self.rtt_ticks)
        return None


@dataclass
class AduFileState:
    file_id: int
    adus_done: int = 0
    frames_sent: int = 0
    clean_frames: int = 0
    all_clean: bool = True
    first_tx: int = -1
    delivery: int = -1
    complete: bool = False


class AduSender:
    """Genie II / static II: each ADU sent ``copies`` times, no feedback."""

    def __init__(self, adu_count: int, replicate: bool, eps: float = 1e-3, max_copies: int = 1000):
        self.adu_count = adu_count
        self.replicate = replicate
        self.eps = eps
        self.max_copies = max_copies
        self.files: list[AduFileState] = []
        self.copies_left = 0
        self.adu_clean = False

    def step(self, now: int, code: int, duration: int, fer: float) -> Frame:
        if self.copies_left == 0:
            if not self.files or self.files[-1].complete:
                self.files.append(AduFileState(len(self.files)))
            self.copies_left = copies_for(fer, self.eps, self.max_copies) if self.replicate else 1
            self.adu_clean = False
        f = self.files[-1]
        if f.first_tx < 0:
            f.first_tx = now
        frame = Frame(f.file_id, f.adus_done, code, now, now + duration)
        f.frames_sent += 1
        self.copies_left -= 1
        return frame

    def receive(self, frame: Frame, lost: bool):
        f = self.files[frame.file_id]
        if not lost:
            f.clean_frames += 1
            self.adu_clean = True
        if self.copies_left == 0:
            if not self.adu_clean:
                f.all_clean = False
            f.adus_done += 1
            if f.adus_done == self.adu_count:
                f.complete = True
                if f.all_clean:
                    f.delivery = frame.end


def static2_stream(n_files: int, adu_count: int):
    """ADU order of static II: ``(file, adu)`` pairs, each exactly once."""
    for m in range(n_files):
        for a in range(adu_count):
            yield m, a
