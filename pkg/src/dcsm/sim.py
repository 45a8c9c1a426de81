"""
Simulation harness: trace -> bit-SNR -> prediction -> protocol -> accounting.

One :class:`PassReport` per (pass, method).  Methods on the same pass share
the trace, the predictions and the frame-loss uniforms (paired comparison).
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import LinkBudgetParams, snr_pipeline
from .coding import (
    BLOCK_LENGTHS,
    DEFAULT_SLOPE,
    RANGE_CODES,
    FerModel,
    adaptive_fer,
    classify_range,
    frame_lengths,
    make_fer_model,
    range_fer_stats,
)
from .coding import y_min as compute_y_min
from .predictor import predict_pass, preliminary_predict, range_prediction_matrix
from .protocol import (
    PAPER_METHODS,
    EngineSetup,
    MethodSpec,
    YContext,
    code_schedule,
    compute_y,
    run_engine,
)
from .traces import PassTrace, SynthProfile, bspline_resample, parse_trace, synth_trace

GIGA = 1e9
CSV_COLUMNS = (
    "pass_id", "method", "y_policy", "B_Tx_Gb", "D_Tx_Gb", "B_Rcvd_Gb", "D_Rcvd_Gb", "F_Tx",
    "F_RcvdSuccess", "F_TxEqv", "F_RcvdEqv", "accuracy_pct", "seed",
)
BLOCK_LENGTH = BLOCK_LENGTHS[-1]  # 8920, the only block length any method uses


class ConfigError(ValueError):
    """Invalid run configuration or trace."""


class AccountingError(RuntimeError):
    """A pass report violates an accounting identity."""


@dataclass(frozen=True)
class RunConfig:
    """Complete description of a simulation run.

    ``trace_paths`` (CSV files, one pass each) take precedence over the
    synthetic profile; otherwise ``passes`` synthetic traces are drawn.
    """

    link: LinkBudgetParams = field(default_factory=LinkBudgetParams)
    rtt: int = 1200  # s
    file_size: int = 50_000_000  # bytes
    overhead: int = 5  # Theta
    methods: tuple[MethodSpec, ...] = PAPER_METHODS
    passes: int = 1
    seed: int = 0
    synth: SynthProfile = field(default_factory=SynthProfile)
    trace_paths: tuple[str, ...] = ()
    p_target: float = 0.9999
    fer_slope: float = DEFAULT_SLOPE
    fer_floor: float = 1e-7
    y_min: int | None = None  # None: derive from the FER calibration
    sky_window: int = 10  # N, seconds
    ar_window: int = 600  # s
    ar_refit: int = 60  # s
    feed_updates: bool = False
    copies_eps: float = 1e-3
    backend: str = "kernel"

    def __post_init__(self):
        if not self.rtt > 0:
            raise ConfigError("rtt must be positive")
        if not self.file_size > 0:
            raise ConfigError("file_size must be positive")
        if self.overhead < 0:
            raise ConfigError("overhead must be >= 0")
        if self.passes < 1:
            raise ConfigError("passes must be >= 1")
        if not 0 < self.p_target < 1:
            raise ConfigError("p_target must lie in (0, 1)")
        if not self.methods:
            raise ConfigError("no methods selected")
        if float(self.link.channel_rate) != int(self.link.channel_rate):
            raise ConfigError("channel_rate must be a whole number of bits per second")

    # derived sizing ---------------------------------------------------------
    @property
    def file_bits(self) -> int:
        return 8 * self.file_size

    @property
    def symbol_bits(self) -> int:
        """Fountain symbol size L."""
        return frame_lengths(BLOCK_LENGTH, RANGE_CODES[-1].rate, self.link.crc_enabled)[0]

    @property
    def source_symbols(self) -> int:
        """K_S = ceil(file bits / L)."""
        return math.ceil(self.file_bits / self.symbol_bits)

    @property
    def adu_count(self) -> int:
        """S_II = ceil(file bits / K)."""
        return math.ceil(self.file_bits / BLOCK_LENGTH)

    @property
    def fer_model(self) -> FerModel:
        return make_fer_model(self.fer_slope, self.fer_floor)

    def resolved_y_min(self) -> int:
        if self.y_min is not None:
            return self.y_min
        return compute_y_min(self.fer_model, self.p_target, self.source_symbols, self.overhead)

    def pass_seed(self, pass_id: int) -> int:
        return int(np.random.SeedSequence([self.seed, pass_id]).generate_state(1, np.uint64)[0])


@dataclass
class PassReport:
    """Accounting for one method on one pass.  Bit counts are exact integers."""

    pass_id: int
    method: str
    y_policy: str
    seed: int
    duration_s: int
    bits_tx: int  # B_Tx
    data_tx: int  # D_Tx
    bits_rcvd: int  # B_Rcvd
    data_rcvd: int  # D_Rcvd
    files_tx: int  # F_Tx
    files_ok: int  # F_RcvdSuccess
    file_bits: int
    payload_bits: int  # L for fountain methods, K for ADU methods
    frames: int
    clean_frames: int
    frames_by_range: list
    k_s: int
    feedback_messages: int
    feedback_symbols: int
    y: list  # y_m per file (empty for ADU methods)
    delivery_times_s: list  # per delivered file, Earth arrival (s)
    accuracy_pct: float
    beta: list
    alpha: list

    @property
    def B_Tx_Gb(self) -> float:
        return self.bits_tx / GIGA

    @property
    def D_Tx_Gb(self) -> float:
        return self.data_tx / GIGA

    @property
    def B_Rcvd_Gb(self) -> float:
        return self.bits_rcvd / GIGA

    @property
    def D_Rcvd_Gb(self) -> float:
        return self.data_rcvd / GIGA

    @property
    def F_TxEqv(self) -> float:
        return self.data_tx / self.file_bits

    @property
    def F_RcvdEqv(self) -> float:
        return self.data_rcvd / self.file_bits

    @property
    def failures(self) -> int:
        return self.frames - self.clean_frames

    @property
    def throughput(self) -> float:
        """Clean symbols per second, T_H."""
        return self.clean_frames / self.duration_s if self.duration_s else 0.0

    @property
    def ratios(self) -> dict:
        def div(a, b):
            return a / b if b else float("nan")

        return {
            "D_Tx/B_Tx": div(self.data_tx, self.bits_tx),
            "D_Rcvd/B_Tx": div(self.data_rcvd, self.bits_tx),
            "D_Rcvd/D_Tx": div(self.data_rcvd, self.data_tx),
            "D_Rcvd/B_Rcvd": div(self.data_rcvd, self.bits_rcvd),
        }

    @property
    def label(self) -> str:
        return self.method if self.y_policy == "n/a" else f"{self.method}:{self.y_policy}"

    def check(self):
        """Raise :class:`AccountingError` if an accounting identity fails."""
        times = self.delivery_times_s
        problems = [
            (self.bits_rcvd <= self.bits_tx, "B_Rcvd > B_Tx"),
            (self.data_rcvd <= self.data_tx, "D_Rcvd > D_Tx"),
            (self.files_ok <= self.files_tx, "F_RcvdSuccess > F_Tx"),
            (self.data_tx == self.payload_bits * self.frames, "D_Tx != payload x frames"),
            (self.data_rcvd == self.payload_bits * self.clean_frames, "D_Rcvd != payload x clean frames"),
            (len(times) == self.files_ok, "delivery count != F_RcvdSuccess"),
            (all(a <= b for a, b in zip(times, times[1:])), "delivery times not monotone"),
        ]
        for ok, msg in problems:
            if not ok:
                raise AccountingError(f"pass {self.pass_id} {self.label}: {msg}")

    def csv_row(self) -> list:
        return [
            self.pass_id, self.method, self.y_policy, self.B_Tx_Gb, self.D_Tx_Gb, self.B_Rcvd_Gb,
            self.D_Rcvd_Gb, self.files_tx, self.files_ok, self.F_TxEqv, self.F_RcvdEqv,
            self.accuracy_pct, self.seed,
        ]

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(
            label=self.label, B_Tx_Gb=self.B_Tx_Gb, D_Tx_Gb=self.D_Tx_Gb, B_Rcvd_Gb=self.B_Rcvd_Gb,
            D_Rcvd_Gb=self.D_Rcvd_Gb, F_TxEqv=self.F_TxEqv, F_RcvdEqv=self.F_RcvdEqv,
            failures=self.failures, throughput=self.throughput, ratios=self.ratios,
        )
        return d


# --------------------------------------------------------------------------
# per-pass channel products


@dataclass
class PassChannel:
    """Trace-derived series shared by all methods on a pass."""

    pass_id: int
    seed: int
    trace: PassTrace
    actual: np.ndarray
    preliminary: np.ndarray
    predicted: np.ndarray
    beta: np.ndarray
    accuracy_pct: float

    @property
    def alpha(self) -> np.ndarray:
        return self.beta.sum(axis=1)

    @property
    def duration(self) -> int:
        return self.trace.duration


def load_trace(config: RunConfig, pass_id: int) -> PassTrace:
    if config.trace_paths:
        path = config.trace_paths[pass_id % len(config.trace_paths)]
        raw = parse_trace(Path(path).read_bytes())
        return bspline_resample(raw, distance=config.link.distance)
    return synth_trace(config.pass_seed(pass_id), config.synth)


def channel_for_pass(config: RunConfig, pass_id: int, trace: PassTrace | None = None) -> PassChannel:
    trace = load_trace(config, pass_id) if trace is None else trace
    if trace.period != 1.0:
        raise ConfigError("pass traces must be on a 1 s grid")
    if trace.duration <= config.rtt:
        raise ConfigError(f"trace of {trace.duration} s is not longer than the RTT ({config.rtt} s)")
    actual = np.asarray(snr_pipeline(config.link, trace.wet_delay, trace.elevation, trace.distance))
    prelim = preliminary_predict(trace, config.link, config.rtt, config.sky_window)
    pred = predict_pass(actual, prelim, config.rtt, config.ar_window, config.ar_refit, config.feed_updates)
    beta, acc = range_prediction_matrix(actual, pred)
    return PassChannel(pass_id, config.pass_seed(pass_id), trace, actual, prelim, pred, beta, acc)


def fer_table(actual, model: FerModel) -> np.ndarray:
    """FER of each range's code at every second's actual SNR (column 0 = 1)."""
    table = np.ones((len(actual), 5))
    for c, code in enumerate(RANGE_CODES, start=1):
        table[:, c] = model.fer(actual, code.block_length, code.rate)
    return table


def frame_ticks(crc: bool = False) -> np.ndarray:
    ticks = np.zeros(5, np.int64)
    for c, code in enumerate(RANGE_CODES, start=1):
        ticks[c] = frame_lengths(code.block_length, code.rate, crc)[1]
    return ticks


def draw_uniforms(seed: int, n_loss: int, n_decode: int) -> tuple[np.ndarray, np.ndarray]:
    """Frame-loss and decode uniforms from two independent Philox streams."""
    loss = np.random.Generator(np.random.Philox(key=seed)).random(n_loss)
    decode = np.random.Generator(np.random.Philox(key=seed).jumped()).random(n_decode)
    return loss, decode


# --------------------------------------------------------------------------
# running


def _y_context(config: RunConfig, prev_beta) -> YContext:
    return YContext(
        source_symbols=config.source_symbols,
        overhead=config.overhead,
        p_target=config.p_target,
        stats=range_fer_stats(config.fer_model),
        beta=prev_beta,
        y_min=config.resolved_y_min(),
    )


def run_method(config: RunConfig, channel: PassChannel, spec: MethodSpec, prev_beta=None,
               draws: tuple[np.ndarray, np.ndarray] | None = None) -> PassReport:
    tps = int(config.link.channel_rate)
    ticks = frame_ticks(config.link.crc_enabled)
    end_tick = channel.duration * tps
    n_loss = end_tick // int(ticks[1:].min()) + 1
    if draws is None:
        draws = draw_uniforms(channel.seed, n_loss, 4096)
    loss, decode = draws
    sched = code_schedule(spec, channel.actual, channel.predicted)
    ctx = _y_context(config, prev_beta)
    setup = EngineSetup(
        sched=sched,
        fer_table=fer_table(channel.actual, config.fer_model),
        actual_range=np.asarray(classify_range(channel.actual), np.int8),
        ticks_per_second=tps,
        end_tick=end_tick,
        rtt_ticks=int(config.rtt) * tps,
        frame_ticks=ticks,
        loss_draws=loss,
        decode_draws=decode,
        fountain=spec.uses_fountain,
        source_symbols=config.source_symbols,
        overhead=config.overhead,
        y_fixed=None if spec.adaptive_mode else compute_y(spec, ctx),
        adaptive_p=adaptive_fer(ctx.stats, spec.adaptive_mode) if spec.adaptive_mode else np.ones(5),
        z=ctx.z,
        adu_count=config.adu_count,
        replicate=spec.method == "genie2",
        copies_eps=config.copies_eps,
    )
    res = run_engine(setup, config.backend)
    payload = config.symbol_bits if spec.uses_fountain else BLOCK_LENGTH
    deliveries = sorted(int(t) for t in res.file_delivery if t >= 0)
    report = PassReport(
        pass_id=channel.pass_id,
        method=spec.method,
        y_policy=spec.y_policy,
        seed=channel.seed,
        duration_s=channel.duration,
        bits_tx=int(np.dot(res.frames_by_code, ticks)),
        data_tx=payload * res.frames,
        bits_rcvd=int(np.dot(res.clean_by_code, ticks)),
        data_rcvd=payload * res.clean_frames,
        files_tx=res.n_files,
        files_ok=res.files_delivered,
        file_bits=config.file_bits,
        payload_bits=payload,
        frames=res.frames,
        clean_frames=res.clean_frames,
        frames_by_range=[int(v) for v in res.frames_by_code],
        k_s=res.k_s,
        feedback_messages=res.feedback_messages,
        feedback_symbols=res.feedback_symbols,
        y=[int(v) for v in res.file_y] if spec.uses_fountain else [],
        delivery_times_s=[t / tps for t in deliveries],
        accuracy_pct=channel.accuracy_pct,
        beta=channel.beta.tolist(),
        alpha=channel.alpha.tolist(),
    )
    report.check()
    return report


def run_pass(config: RunConfig, pass_id: int = 0, methods: Sequence[MethodSpec] | None = None,
             trace: PassTrace | None = None, prev_beta=None) -> list[PassReport]:
    """Simulate every method on one pass.

    ``prev_beta`` is the previous pass's actual-vs-predicted matrix used by
    the ``fixed_y``/``fixed_2y`` policies; when omitted and ``pass_id > 0``
    it is recomputed from pass ``pass_id - 1``.
    """
    methods = tuple(methods or config.methods)
    channel = channel_for_pass(config, pass_id, trace)
    if prev_beta is None and pass_id > 0 and trace is None and any(
            m.y_policy in ("fixed_y", "fixed_2y") for m in methods):
        prev_beta = channel_for_pass(config, pass_id - 1).beta
    ticks = frame_ticks(config.link.crc_enabled)
    n_loss = channel.duration * int(config.link.channel_rate) // int(ticks[1:].min()) + 1
    draws = draw_uniforms(channel.seed, n_loss, 4096)
    return [run_method(config, channel, m, prev_beta, draws) for m in methods]


def _run_pass_job(args):
    config, pass_id = args
    return run_pass(config, pass_id)


@dataclass
class EnsembleResult:
    reports: list[PassReport]

    def by_method(self) -> dict[str, list[PassReport]]:
        out: dict[str, list[PassReport]] = {}
        for r in self.reports:
            out.setdefault(r.label, []).append(r)
        return out

    def summary(self) -> dict[str, dict]:
        """Per-method means (and medians of file counts) over passes."""
        rows = {}
        for label, reps in self.by_method().items():
            def mean(attr):
                return float(np.mean([getattr(r, attr) for r in reps]))

            rows[label] = {
                "passes": len(reps),
                "B_Tx_Gb": mean("B_Tx_Gb"),
                "D_Tx_Gb": mean("D_Tx_Gb"),
                "B_Rcvd_Gb": mean("B_Rcvd_Gb"),
                "D_Rcvd_Gb": mean("D_Rcvd_Gb"),
                "F_Tx": mean("files_tx"),
                "F_RcvdSuccess": mean("files_ok"),
                "F_RcvdSuccess_median": float(np.median([r.files_ok for r in reps])),
                "F_TxEqv": mean("F_TxEqv"),
                "F_RcvdEqv": mean("F_RcvdEqv"),
                "accuracy_pct": mean("accuracy_pct"),
                "D_Tx/B_Tx": float(np.mean([r.ratios["D_Tx/B_Tx"] for r in reps])),
                "D_Rcvd/D_Tx": float(np.mean([r.ratios["D_Rcvd/D_Tx"] for r in reps])),
            }
        return rows

    def improvement(self, method: str, baseline: str, stat: str = "F_RcvdSuccess") -> float:
        """Percentage gain of ``method`` over ``baseline`` in a summary field."""
        s = self.summary()
        return (s[method][stat] - s[baseline][stat]) / s[baseline][stat] * 100.0


def run_ensemble(config: RunConfig, methods: Sequence[MethodSpec] | None = None,
                 n_passes: int | None = None, jobs: int = 1) -> EnsembleResult:
    """Simulate ``n_passes`` passes; results are ordered by (pass, method)."""
    n = config.passes if n_passes is None else n_passes
    if n < 1:
        raise ConfigError("n_passes must be >= 1")
    if methods is not None:
        config = replace(config, methods=tuple(methods))
    jobs_list = [(config, k) for k in range(n)]
    if jobs > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_pass_job, jobs_list))
    else:
        chunks = [_run_pass_job(j) for j in jobs_list]
    return EnsembleResult([r for chunk in chunks for r in chunk])


# --------------------------------------------------------------------------
# outputs


def delivery_timeline(report: PassReport) -> tuple[np.ndarray, np.ndarray]:
    """Step series (time s, cumulative files delivered)."""
    times = np.asarray(report.delivery_times_s, dtype=float)
    return times, np.arange(1, len(times) + 1)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def reports_to_csv(reports: Sequence[PassReport]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([_fmt(v) for v in r.csv_row()])
    return out.getvalue()


def reports_to_json(result: EnsembleResult, config: RunConfig | None = None) -> str:
    doc = {
        "summary": result.summary(),
        "passes": [r.to_dict() for r in result.reports],
    }
    if config is not None:
        doc["config"] = {"seed": config.seed, "passes": config.passes, "rtt": config.rtt,
                         "file_size": config.file_size, "overhead": config.overhead,
                         "p_target": config.p_target, "y_min": config.resolved_y_min(),
                         "methods": [m.label for m in config.methods]}
    return json.dumps(doc, indent=2, sort_keys=True)


def timelines_to_csv(reports: Sequence[PassReport]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(("pass_id", "method", "time_s", "files_delivered"))
    for r in reports:
        times, counts = delivery_timeline(r)
        for t, c in zip(times, counts):
            w.writerow((r.pass_id, r.label, repr(float(t)), int(c)))
    return out.getvalue()


def snr_series_to_csv(channel: PassChannel) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(("pass_id", "t_s", "actual_db", "preliminary_db", "predicted_db", "elevation_deg", "wet_delay_cm"))
    tr = channel.trace
    for t in range(len(channel.actual)):
        w.writerow((channel.pass_id, t, repr(float(channel.actual[t])), repr(float(channel.preliminary[t])),
                    repr(float(channel.predicted[t])), repr(float(tr.elevation[t])), repr(float(tr.wet_delay[t]))))
    return out.getvalue()
