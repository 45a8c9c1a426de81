"""
Run-configuration documents (YAML or JSON).

Top-level keys::

    seed, passes, rtt, file_size, overhead, methods, traces, backend, jobs,
    link:        LinkBudgetParams fields
    calibration: fer_slope, fer_floor, p_target, y_min
    synth:       SynthProfile fields
    predictor:   sky_window, ar_window, ar_refit, feed_updates
    genie2:      copies_eps
    output:      dir, format

Unknown keys anywhere are rejected.  Bundled configs can be referred to by
name (``quickstart``).
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .channel import ChannelDomainError, LinkBudgetParams
from .protocol import MethodSpec
from .sim import ConfigError, RunConfig
from .traces import SynthProfile

OUTPUT_FORMATS = ("json", "csv", "both")
BUNDLED = ("quickstart",)

_TOP_KEYS = {"seed", "passes", "rtt", "file_size", "overhead", "methods", "traces", "backend", "jobs",
             "link", "calibration", "synth", "predictor", "genie2", "output"}
_CALIBRATION_KEYS = {"fer_slope", "fer_floor", "p_target", "y_min"}
_PREDICTOR_KEYS = {"sky_window", "ar_window", "ar_refit", "feed_updates"}
_GENIE2_KEYS = {"copies_eps"}
_OUTPUT_KEYS = {"dir", "format"}


@dataclass(frozen=True)
class CliConfig:
    run: RunConfig = field(default_factory=RunConfig)
    out_dir: str = "out"
    format: str = "both"
    jobs: int = 1
    verbosity: int = 0


def _fields(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def _check_keys(section: str, doc: dict, allowed: set[str]):
    if not isinstance(doc, dict):
        raise ConfigError(f"section {section!r} must be a mapping")
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(unknown)}")


def bundled_config_path(name: str) -> Path:
    return Path(str(resources.files("dcsm") / "configs" / f"{name}.yaml"))


def read_document(path: str | Path) -> dict:
    """Parse a YAML/JSON file (or bundled config name) into a mapping."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        p = bundled_config_path(str(path))
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    doc.setdefault("_base_dir", str(p.parent))
    return doc


def build_config(doc: dict, base_dir: str | Path | None = None) -> CliConfig:
    """Validate a configuration mapping and build a :class:`CliConfig`."""
    doc = dict(doc)
    base = Path(doc.pop("_base_dir", base_dir or "."))
    _check_keys("config", doc, _TOP_KEYS)
    try:
        link = LinkBudgetParams(**_section(doc, "link", _fields(LinkBudgetParams)))
        synth_doc = _section(doc, "synth", _fields(SynthProfile))
        if "storm_duration" in synth_doc:
            synth_doc["storm_duration"] = tuple(synth_doc["storm_duration"])
        synth = SynthProfile(**synth_doc)
    except (TypeError, ValueError, ChannelDomainError) as exc:
        raise ConfigError(str(exc)) from None

    run_kw: dict = {"link": link, "synth": synth}
    for key in ("seed", "passes", "rtt", "file_size", "overhead", "backend"):
        if key in doc:
            run_kw[key] = doc[key]
    if "methods" in doc:
        run_kw["methods"] = parse_methods(doc["methods"])
    if "traces" in doc:
        traces = doc["traces"] or []
        if not isinstance(traces, list):
            raise ConfigError("traces must be a list of CSV paths")
        run_kw["trace_paths"] = tuple(str((base / t) if not Path(t).is_absolute() else Path(t)) for t in traces)
    cal = _section(doc, "calibration", _CALIBRATION_KEYS)
    run_kw.update(cal)
    run_kw.update(_section(doc, "predictor", _PREDICTOR_KEYS))
    run_kw.update(_section(doc, "genie2", _GENIE2_KEYS))
    if run_kw.get("backend", "kernel") not in ("kernel", "reference"):
        raise ConfigError("backend must be 'kernel' or 'reference'")
    try:
        run = RunConfig(**run_kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None

    out = _section(doc, "output", _OUTPUT_KEYS)
    fmt = out.get("format", "both")
    if fmt not in OUTPUT_FORMATS:
        raise ConfigError(f"output.format must be one of {OUTPUT_FORMATS}")
    jobs = doc.get("jobs", 1)
    if not isinstance(jobs, int) or jobs < 1:
        raise ConfigError("jobs must be a positive integer")
    return CliConfig(run=run, out_dir=str(out.get("dir", "out")), format=fmt, jobs=jobs)


def _section(doc: dict, name: str, allowed: set[str]) -> dict:
    sec = doc.get(name) or {}
    _check_keys(name, sec, allowed)
    return dict(sec)


def parse_methods(value) -> tuple[MethodSpec, ...]:
    """Accept a list or a comma-separated string of ``method[:policy]``."""
    items = value.split(",") if isinstance(value, str) else list(value)
    try:
        specs = tuple(MethodSpec.parse(str(v)) for v in items if str(v).strip())
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not specs:
        raise ConfigError("no methods selected")
    return specs


def load_config(path: str | Path | None) -> CliConfig:
    if path is None:
        return CliConfig()
    return build_config(read_document(path))
