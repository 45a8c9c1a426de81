"""
Frame arithmetic, turbo FER model, code selection and fountain overhead sizing.

The turbo frame carries one fountain symbol::

    | ASM 32 | ESI 32 | symbol L | CRC 16 (optional) | tail 4 |   all / r

so ``K = L + 32 (+ 16)`` and a frame occupies ``(K + 36) / r`` channel bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import NormalDist
from typing import Mapping, Sequence

import numpy as np

BLOCK_LENGTHS = (1784, 3568, 7136, 8920)
CODE_RATES = (Fraction(1, 2), Fraction(1, 3), Fraction(1, 4), Fraction(1, 6))

ASM_BITS = 32
TAIL_BITS = 4
ESI_BITS = 32
CRC_BITS = 16

RANGE_IDS = ("A", "B", "C", "D", "E")
# lower edges of ranges B..E; Range A is everything below -0.5 dB
RANGE_EDGES = (-0.5, -0.1, 0.15, 0.85)
RANGE_E_TOP = 2.2

_STD_NORMAL = NormalDist()


@dataclass(frozen=True, order=True)
class TurboCode:
    block_length: int
    rate: Fraction

    def __post_init__(self):
        object.__setattr__(self, "rate", Fraction(self.rate).limit_denominator(64))

    @property
    def channel_bits(self) -> int:
        return frame_lengths(self.block_length, self.rate)[1]

    def __str__(self):
        return f"({self.block_length}, {self.rate})"


# codes assigned to ranges B, C, D, E
RANGE_CODES = tuple(TurboCode(8920, r) for r in (Fraction(1, 6), Fraction(1, 4), Fraction(1, 3), Fraction(1, 2)))
STATIC_CODE = RANGE_CODES[-1]


@dataclass(frozen=True)
class SnrRange:
    id: str
    low: float
    high: float
    code: TurboCode | None


SNR_RANGES = (
    SnrRange("A", -math.inf, RANGE_EDGES[0], None),
    SnrRange("B", RANGE_EDGES[0], RANGE_EDGES[1], RANGE_CODES[0]),
    SnrRange("C", RANGE_EDGES[1], RANGE_EDGES[2], RANGE_CODES[1]),
    SnrRange("D", RANGE_EDGES[2], RANGE_EDGES[3], RANGE_CODES[2]),
    SnrRange("E", RANGE_EDGES[3], RANGE_E_TOP, RANGE_CODES[3]),
)


def frame_lengths(block_length: int, rate, crc: bool = False) -> tuple[int, int]:
    """Return ``(payload L, channel bits)`` for a turbo code."""
    rate = Fraction(rate).limit_denominator(64)
    if block_length <= ASM_BITS + ESI_BITS or rate <= 0:
        raise ValueError("invalid turbo code")
    payload = block_length - ESI_BITS - (CRC_BITS if crc else 0)
    channel = Fraction(block_length + ASM_BITS + TAIL_BITS) / rate
    if channel.denominator != 1:
        raise ValueError(f"frame length {channel} is not an integer number of bits")
    return payload, int(channel)


def data_rate(block_length: int, rate, channel_rate: float, variant: str = "with-fountain") -> float:
    """Information bit rate (bit/s) carried by a stream of turbo frames.

    ``with-fountain`` counts the fountain symbol payload ``K - 32``;
    ``plain`` counts the whole ADU ``K`` (no ESI header).
    """
    rate = float(Fraction(rate))
    if variant == "with-fountain":
        info = block_length - ESI_BITS
    elif variant == "plain":
        info = block_length
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return info / (block_length + ASM_BITS + TAIL_BITS) * channel_rate * rate


# --------------------------------------------------------------------------
# FER model


@dataclass(frozen=True)
class FerModel:
    """Waterfall family ``clip(0.5 * 10**(-slope * (snr - midpoint)), floor, 1)``.

    ``midpoints`` maps code rate -> midpoint (dB) for K = 8920; shorter
    blocks are shifted right by ``block_offsets[K]``.
    """

    slope: float
    floor: float
    midpoints: Mapping[Fraction, float]
    block_offsets: Mapping[int, float] = field(
        default_factory=lambda: {8920: 0.0, 7136: 0.15, 3568: 0.3, 1784: 0.45}
    )

    def midpoint(self, block_length: int, rate) -> float:
        rate = Fraction(rate).limit_denominator(64)
        return self.midpoints[rate] + self.block_offsets[block_length]

    def fer(self, snr_db, block_length: int = 8920, rate=Fraction(1, 2)):
        m = self.midpoint(block_length, rate)
        # exponent clipped so that very low SNRs saturate without overflow
        expo = np.minimum(-self.slope * (np.asarray(snr_db, dtype=float) - m), 50.0)
        p = np.clip(0.5 * np.power(10.0, expo), self.floor, 1.0)
        return float(p) if np.ndim(p) == 0 else p


def calibrate_midpoints(slope: float, edges: Sequence[float] = RANGE_EDGES) -> dict[Fraction, float]:
    """Place K=8920 waterfall midpoints so the throughput objective switches
    rate exactly at the range edges.

    The rate-1/6 midpoint sits on the dropout edge.  For every higher edge
    ``b`` between rates ``lo < hi`` the crossover condition
    ``(1 - P_hi(b)) hi = (1 - P_lo(b)) lo`` fixes ``P_hi(b)`` and therefore
    the midpoint of ``hi``.
    """
    rates = [Fraction(1, 6), Fraction(1, 4), Fraction(1, 3), Fraction(1, 2)]
    mids = {rates[0]: float(edges[0])}
    for lo, hi, b in zip(rates, rates[1:], edges[1:]):
        p_lo = min(0.5 * 10 ** (-slope * (b - mids[lo])), 1.0)
        p_hi = 1.0 - float(lo / hi) * (1.0 - p_lo)
        mids[hi] = b + math.log10(p_hi / 0.5) / slope
    return mids


def make_fer_model(slope: float, floor: float = 1e-7) -> FerModel:
    return FerModel(slope=slope, floor=floor, midpoints=calibrate_midpoints(slope))


DEFAULT_SLOPE = 15.2  # dB^-1; puts y_min at 453 for p_target = 0.9999
DEFAULT_FER_MODEL = make_fer_model(DEFAULT_SLOPE)


def fer(snr_db, block_length: int = 8920, rate=Fraction(1, 2), model: FerModel = DEFAULT_FER_MODEL):
    """Frame error rate of turbo code (K, r) at the given bit-SNR."""
    return model.fer(snr_db, block_length, rate)


def throughput_objective(snr_db, block_length: int, rate, model: FerModel = DEFAULT_FER_MODEL):
    """Normalised goodput ``(1 - P_E) r (K - 32) / (K + 36)``."""
    r = float(Fraction(rate))
    eff = (block_length - ESI_BITS) / (block_length + ASM_BITS + TAIL_BITS)
    return (1.0 - model.fer(snr_db, block_length, rate)) * r * eff


def best_code(snr_db: float, model: FerModel = DEFAULT_FER_MODEL) -> TurboCode:
    """Argmax of the throughput objective over all 16 CCSDS codes."""
    return max(
        (TurboCode(k, r) for k in BLOCK_LENGTHS for r in CODE_RATES),
        key=lambda c: throughput_objective(snr_db, c.block_length, c.rate, model),
    )


def classify_range(snr_db):
    """Map bit-SNR (dB) to range index 0..4 (A..E); vectorised.

    Ranges are half-open ``[lo, hi)``; everything >= 0.85 dB is Range E.
    """
    idx = np.searchsorted(RANGE_EDGES, np.asarray(snr_db, dtype=float), side="right")
    return int(idx) if np.ndim(idx) == 0 else idx


def range_id(snr_db: float) -> str:
    return RANGE_IDS[classify_range(snr_db)]


def select_turbo(snr_db: float) -> TurboCode | None:
    """Code commanded for a bit-SNR; ``None`` means stop transmitting."""
    return SNR_RANGES[classify_range(snr_db)].code


# --------------------------------------------------------------------------
# Per-range FER statistics


@dataclass(frozen=True)
class RangeFerStats:
    """FER of each range's assigned code at its edges and averaged over a grid.

    Arrays are indexed A..E; Range A entries are 1 (nothing gets through).
    """

    p_min: np.ndarray
    p_max: np.ndarray
    p_mid: np.ndarray  # (p_min + p_max) / 2
    p_grid: np.ndarray  # mean over the SNR grid inside the range


def range_fer_stats(model: FerModel = DEFAULT_FER_MODEL, grid_step: float = 0.01) -> RangeFerStats:
    p_min = np.ones(5)
    p_max = np.ones(5)
    p_grid = np.ones(5)
    for i, rng in enumerate(SNR_RANGES[1:], start=1):
        code = rng.code
        p_max[i] = model.fer(rng.low, code.block_length, code.rate)
        p_min[i] = model.fer(rng.high, code.block_length, code.rate)
        n = int(round((rng.high - rng.low) / grid_step))
        grid = rng.low + grid_step * np.arange(n)
        p_grid[i] = float(np.mean(model.fer(grid, code.block_length, code.rate)))
    return RangeFerStats(p_min=p_min, p_max=p_max, p_mid=(p_min + p_max) / 2, p_grid=p_grid)


# --------------------------------------------------------------------------
# Fountain code and overhead sizing


def fountain_decode_success(received_clean: int, source_symbols: int) -> float:
    """Probability that ``received_clean`` distinct symbols decode the block."""
    if received_clean < 0 or source_symbols < 1:
        raise ValueError("counts must be non-negative and K_S >= 1")
    excess = received_clean - source_symbols
    if excess < 0:
        return 0.0
    return 1.0 - 10.0 ** (-2 * (excess + 1))


def q_inv(p: float) -> float:
    """Inverse of the standard normal right-tail function Q."""
    if not 0.0 < p < 1.0:
        raise ValueError("tail probability must lie in (0, 1)")
    return -_STD_NORMAL.inv_cdf(p)


def y_required(mean: float, variance: float, p_target: float) -> int:
    """Smallest integer y with ``y >= sqrt(Var) Q^-1(1 - p_target) + E``."""
    if mean < 0 or variance < 0:
        raise ValueError("mean and variance must be non-negative")
    bound = math.sqrt(variance) * q_inv(1.0 - p_target) + mean
    # guard against 452.99999999 style round-off pushing us to the next integer
    return max(0, math.ceil(bound - 1e-9))


def symbol_proportions(beta_pred: np.ndarray, rates: Sequence[float]) -> np.ndarray:
    """Share of symbols sent at each rate given time shares per range."""
    weights = np.asarray(rates, dtype=float) * np.asarray(beta_pred, dtype=float)
    total = weights.sum()
    if total <= 0:
        raise ValueError("no transmission time at a non-zero rate")
    return weights / total


RANGE_RATES = (0.0, 1 / 6, 1 / 4, 1 / 3, 1 / 2)


def y_mean_var_fixed(beta, p_avg, source_symbols: int, overhead: int, y: int,
                     rates: Sequence[float] = RANGE_RATES) -> tuple[float, float]:
    """Mean and variance of per-file losses for the fixed-y approach.

    ``beta`` is the 5x5 joint occupancy matrix (rows actual, columns
    predicted, total 1).  Row-normalising gives the per-range confusion
    used for ``p_hat_i = sum_j beta_ij p_j_avg``; column sums give the
    predicted time shares that weight the symbol proportions.
    """
    beta = np.asarray(beta, dtype=float)
    p_avg = np.asarray(p_avg, dtype=float)
    rows = beta.sum(axis=1, keepdims=True)
    conditional = np.divide(beta, rows, out=np.zeros_like(beta), where=rows > 0)
    p_hat = conditional @ p_avg
    pi = symbol_proportions(beta.sum(axis=0), rates)
    n = source_symbols + overhead + y
    mean = float(np.sum(pi * n * p_hat))
    var = float(np.sum(pi * n * p_hat * (1.0 - p_hat)))
    return mean, var


ADAPTIVE_MODES = ("best", "average", "worst")


def adaptive_fer(stats: RangeFerStats, mode: str) -> np.ndarray:
    if mode == "best":
        return stats.p_min
    if mode == "average":
        return stats.p_mid
    if mode == "worst":
        return stats.p_max
    raise ValueError(f"unknown adaptive mode {mode!r}")


def y_mean_var_adaptive(pi, mode: str, source_symbols: int, overhead: int, y: int,
                        stats: RangeFerStats | None = None) -> tuple[float, float]:
    """Mean and variance of file losses from the file's own rate mix ``pi``.

    ``pi`` holds symbol proportions for ranges A..E (A is always 0).
    """
    stats = stats or range_fer_stats()
    p = adaptive_fer(stats, mode)
    pi = np.asarray(pi, dtype=float)
    n = source_symbols + overhead + y
    return float(np.sum(pi * n * p)), float(np.sum(pi * n * p * (1.0 - p)))


def solve_y(mean_var, p_target: float, max_iter: int = 100) -> int:
    """Fixed point of ``y = y_required(*mean_var(y))`` starting from 0."""
    y = 0
    for _ in range(max_iter):
        y_next = y_required(*mean_var(y), p_target)
        if y_next == y:
            return y
        y = y_next
    return y


def y_min(model: FerModel = DEFAULT_FER_MODEL, p_target: float = 0.9999,
          source_symbols: int = 45005, overhead: int = 5) -> int:
    """Fixed y for a pass spent entirely, and correctly predicted, in Range E."""
    beta = np.zeros((5, 5))
    beta[4, 4] = 1.0
    p_avg = range_fer_stats(model).p_grid
    return solve_y(lambda y: y_mean_var_fixed(beta, p_avg, source_symbols, overhead, y), p_target)
