"""Transfer methods, overhead policies and per-method y sizing."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..coding import (
    ADAPTIVE_MODES,
    RANGE_RATES,
    RangeFerStats,
    q_inv,
    range_fer_stats,
    solve_y,
    y_mean_var_adaptive,
    y_mean_var_fixed,
)

METHODS = ("dcsm", "genie1", "genie2", "static1", "static2")
FOUNTAIN_METHODS = ("dcsm", "genie1", "static1")
Y_POLICIES = (
    "fixed_y", "fixed_2y", "fixed_ymin", "adaptive_best", "adaptive_average", "adaptive_worst", "n/a",
)
Y_MIN = 453


@dataclass(frozen=True)
class MethodSpec:
    """A transfer method and its overhead policy, e.g. ``dcsm:fixed_ymin``."""

    method: str
    y_policy: str = "n/a"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.y_policy not in Y_POLICIES:
            raise ValueError(f"unknown y policy {self.y_policy!r}; expected one of {Y_POLICIES}")
        if (self.y_policy == "n/a") != (self.method in ("genie2", "static2")):
            raise ValueError(f"y policy {self.y_policy!r} is invalid for method {self.method!r}")

    @property
    def uses_fountain(self) -> bool:
        return self.method in FOUNTAIN_METHODS

    @property
    def adaptive_mode(self) -> str | None:
        if self.y_policy.startswith("adaptive_"):
            return self.y_policy.split("_", 1)[1]
        return None

    @property
    def label(self) -> str:
        return self.method if self.y_policy == "n/a" else f"{self.method}:{self.y_policy}"

    def __str__(self):
        return self.label

    @classmethod
    def parse(cls, text: str) -> "MethodSpec":
        """Parse ``method[:policy]``; fountain methods default to ``fixed_ymin``."""
        method, _, policy = text.strip().partition(":")
        if not policy:
            policy = "fixed_ymin" if method in FOUNTAIN_METHODS else "n/a"
        return cls(method, policy)


PAPER_METHODS = tuple(
    MethodSpec.parse(s) for s in ("dcsm:fixed_ymin", "genie1:fixed_ymin", "static1:fixed_ymin", "genie2", "static2")
)


def genie2_copies(fer: float, eps: float = 1e-3, max_copies: int = 1000) -> int:
    """Smallest ``m`` with ``fer**m <= eps``."""
    if not 0.0 <= fer < 1.0:
        raise ValueError("fer must lie in [0, 1)")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if fer <= eps:
        return 1
    # the tolerance absorbs round-off in exact cases such as 0.1**3 vs 1e-3
    m = math.ceil(math.log(eps) / math.log(fer) - 1e-9)
    return int(min(max(m, 1), max_copies))


@dataclass(frozen=True)
class YContext:
    """Inputs for sizing y.

    ``beta`` / ``alpha`` come from the previous pass (``None`` for the first
    pass, which then assumes an all-Range-E channel).
    """

    source_symbols: int = 45005
    overhead: int = 5
    p_target: float = 0.9999
    stats: RangeFerStats = field(default_factory=range_fer_stats)
    beta: np.ndarray | None = None
    y_min: int = Y_MIN

    @property
    def z(self) -> float:
        return q_inv(1.0 - self.p_target)


def _all_e_beta() -> np.ndarray:
    beta = np.zeros((5, 5))
    beta[4, 4] = 1.0
    return beta


def fixed_y(spec: MethodSpec, ctx: YContext) -> int:
    """Pass-wide y for the ``fixed_y`` family."""
    beta = ctx.beta if ctx.beta is not None else _all_e_beta()
    beta = np.asarray(beta, dtype=float)
    if spec.method == "genie1":
        # the genie knows actual ranges: no confusion, predicted shares = alpha
        beta = np.diag(beta.sum(axis=1))
    elif spec.method == "static1":
        # rate 1/2 everywhere; the a-priori view is an all-Range-E pass
        beta = _all_e_beta()
    if beta[:, 1:].sum() <= 0:
        # nothing was (predicted to be) transmittable last pass
        beta = _all_e_beta()
    p_avg = ctx.stats.p_grid
    return solve_y(
        lambda y: y_mean_var_fixed(beta, p_avg, ctx.source_symbols, ctx.overhead, y, RANGE_RATES),
        ctx.p_target,
    )


def compute_y(spec: MethodSpec, ctx: YContext, pi=None):
    """y for a method under its policy.

    Fixed policies return one integer for the whole pass.  Adaptive
    policies need the file's rate mix ``pi`` (A..E proportions) and return
    that file's ``y_m``.  Methods without a fountain code return ``None``.
    """
    policy = spec.y_policy
    if policy == "n/a":
        return None
    if policy == "fixed_ymin":
        return ctx.y_min
    if policy == "fixed_y":
        return fixed_y(spec, ctx)
    if policy == "fixed_2y":
        return 2 * fixed_y(spec, ctx)
    mode = spec.adaptive_mode
    assert mode in ADAPTIVE_MODES
    if pi is None:
        raise ValueError("adaptive policies need the file's rate proportions")
    return solve_y(
        lambda y: y_mean_var_adaptive(pi, mode, ctx.source_symbols, ctx.overhead, y, ctx.stats),
        ctx.p_target,
    )
