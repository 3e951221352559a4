"""Experiment presets and the INI configuration format.

A configuration file has one ``[run]`` section and one ``[series.<label>]``
section per code. Example::

    [run]
    kind = sweep
    deltas = 0.1, 0.2, 0.3
    rho = 1:1.2, 1:12
    trials = 10000
    seed = 0
    rs_reference = 24, 12, 24

    [series.rs]
    family = rs
    n = 24
    k = 12
    m = 24

    [series.ldpc]
    family = ldpc
    q = 227
    j = 2
    kk = 4
    m = 24
    trials = 1000

Keys of ``[run]``: kind (sweep | opt-compare), deltas, rho, trials, seed,
mu, lambda, N, windows, churn_mode, rs_reference, file_symbols.
Keys of a series: family plus its code parameters (rs: n k m;
mbr / msr-lr: n k m d; msr-hr: t z; ldpc: q j kk m), and the optional
scale and trials.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from typing import Literal

from .code_model import ArrayCodeSpec, CodeError
from .cost_models import (
    DEFAULT_FILE_SYMBOLS,
    CodeScenario,
    CostParams,
    LDPCScenario,
    MBRScenario,
    MSRHRScenario,
    MSRLRScenario,
    RSScenario,
    ScenarioError,
)
from .churn_sim import SimConfig

DELTA_GRID = tuple(round(0.1 * i, 1) for i in range(1, 11))


class ConfigError(ValueError):
    """Invalid configuration; ``line`` points into the source file when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line else f"{path}: "
        elif line:
            where = f"line {line}: "
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class Series:
    """One code in an experiment, with its MSR-style rescaling and trial count."""

    label: str
    scenario: CodeScenario
    scale: float = 1.0
    trials: int | None = None  # None means the preset default


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    series: tuple[Series, ...]
    deltas: tuple[float, ...]
    rho_pairs: tuple[tuple[float, float], ...]
    trials: int
    seed: int = 0
    rs_reference: tuple[int, int, int] = (24, 12, 24)
    kind: Literal["sweep", "opt-compare"] = "sweep"
    mu: float = 1.0
    lam: float | None = None
    N: int = 100
    windows: int = 1
    churn_mode: str = "binomial-survival"
    file_symbols: int = DEFAULT_FILE_SYMBOLS

    def cost_params(self) -> tuple[CostParams, ...]:
        return tuple(CostParams(d, b) for d, b in self.rho_pairs)

    def configs(self, trials: int | None = None, seed: int | None = None) -> list[SimConfig]:
        """One config per (series, delta); ``trials`` and ``seed`` override every series."""
        out = []
        params = self.cost_params()
        for s in self.series:
            for delta in self.deltas:
                out.append(
                    SimConfig(
                        scenario=s.scenario,
                        delta=delta,
                        mu=self.mu,
                        lam=self.lam,
                        N=self.N,
                        windows=self.windows,
                        trials=trials or s.trials or self.trials,
                        seed=self.seed if seed is None else seed,
                        cost_params=params,
                        churn_mode=self.churn_mode,
                        rs_reference=self.rs_reference,
                        scale=s.scale,
                    )
                )
        return out


def _ldpc(q: int, kk: int, m: int, j: int = 2) -> LDPCScenario:
    return LDPCScenario.from_array(ArrayCodeSpec(q, j, kk), m)


LDPC_TRIALS = 1000

PRESETS: dict[str, ExperimentPreset] = {
    "rate-half": ExperimentPreset(
        name="rate-half",
        series=(
            Series("rs", RSScenario(24, 12, 24)),
            Series("mbr", MBRScenario(24, 12, 24, 23)),
            Series("msr", MSRLRScenario(24, 12, 24, 23)),
            Series("ldpc", _ldpc(227, 4, 24), trials=LDPC_TRIALS),
        ),
        deltas=DELTA_GRID,
        rho_pairs=((1, 1.2), (1, 12), (1, 17), (1, 26)),
        trials=10000,
        rs_reference=(24, 12, 24),
    ),
    "rate-three-quarters": ExperimentPreset(
        name="rate-three-quarters",
        series=(
            Series("rs", RSScenario(24, 18, 24)),
            Series("mbr", MBRScenario(24, 18, 24, 23)),
            Series("msr", MSRHRScenario(5, 3), scale=23 / 24),
            Series("ldpc", _ldpc(257, 8, 24), trials=LDPC_TRIALS),
        ),
        deltas=DELTA_GRID,
        rho_pairs=((1, 3), (1, 18), (1, 24), (1, 50)),
        trials=10000,
        rs_reference=(24, 18, 24),
    ),
    "blocklength-sweep": ExperimentPreset(
        name="blocklength-sweep",
        series=tuple(Series(f"ldpc-{q}", _ldpc(q, 8, 25)) for q in (31, 53, 137, 271, 503)),
        deltas=DELTA_GRID,
        rho_pairs=((1, 1.2), (1, 3), (1, 16)),
        trials=LDPC_TRIALS,
        rs_reference=(24, 18, 24),
    ),
    "opt-compare": ExperimentPreset(
        name="opt-compare",
        series=(Series("ldpc-3", _ldpc(23, 8, 62)), Series("ldpc-6", _ldpc(23, 8, 31))),
        deltas=(0.1, 0.4, 0.7),
        rho_pairs=((1, 10), (1, 20)),
        trials=1000,
        rs_reference=(24, 18, 24),
        kind="opt-compare",
    ),
}


# --- INI format ----------------------------------------------------------------

_RUN_KEYS = {
    "kind", "deltas", "rho", "trials", "seed", "mu", "lambda", "n",
    "windows", "churn_mode", "rs_reference", "file_symbols", "name",
}
_FAMILY_KEYS = {
    "rs": ("n", "k", "m"),
    "mbr": ("n", "k", "m", "d"),
    "msr-lr": ("n", "k", "m", "d"),
    "msr-hr": ("t", "z"),
    "ldpc": ("q", "j", "kk", "m"),
}
_SERIES_EXTRA = {"family", "scale", "trials"}


def _line_index(text: str) -> dict[tuple[str, str | None], int]:
    # configparser drops positions, so locate sections and keys by hand
    index: dict[tuple[str, str | None], int] = {}
    section = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            index.setdefault((section, None), no)
        elif section is not None:
            for sep in ("=", ":"):
                if sep in line:
                    index.setdefault((section, line.split(sep, 1)[0].strip().lower()), no)
                    break
    return index


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, lines: dict, path: str | None):
        self.parser = parser
        self.lines = lines
        self.path = path

    def fail(self, msg: str, section: str, key: str | None = None):
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        raise ConfigError(msg, line, self.path)

    def get(self, section: str, key: str, conv, default=None, required: bool = False):
        sec = self.parser[section]
        if key not in sec:
            if required:
                self.fail(f"missing key '{key}' in [{section}]", section)
            return default
        raw = sec[key].strip()
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            self.fail(f"bad value for '{key}': {raw!r} ({exc})", section, key)


def _floats(raw: str) -> tuple[float, ...]:
    vals = tuple(float(x) for x in raw.replace(",", " ").split())
    if not vals:
        raise ValueError("empty list")
    return vals


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(x) for x in raw.replace(",", " ").split())


def _rho(raw: str) -> tuple[tuple[float, float], ...]:
    pairs = []
    for item in raw.split(","):
        a, sep, b = item.strip().partition(":")
        if not sep:
            raise ValueError("pairs are written as rho_d2d:rho_bs")
        pairs.append((float(a), float(b)))
    if not pairs:
        raise ValueError("no cost pairs")
    return tuple(pairs)


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def parse_config(text: str, path: str | None = None) -> ExperimentPreset:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__", inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text, source=path or "<config>")
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None), path) from None
    r = _Reader(parser, _line_index(text), path)

    if not parser.has_section("run"):
        raise ConfigError("missing [run] section", None, path)
    for key in parser["run"]:
        if key not in _RUN_KEYS:
            r.fail(f"unknown key '{key}' in [run]", "run", key)
    for section in parser.sections():
        if section != "run" and not section.startswith("series."):
            r.fail(f"unknown section [{section}]", section)

    kind = r.get("run", "kind", str, "sweep")
    if kind not in ("sweep", "opt-compare"):
        r.fail(f"kind must be sweep or opt-compare, got {kind!r}", "run", "kind")
    rho = r.get("run", "rho", _rho, required=True)
    for d2d, bs in rho:
        try:
            CostParams(d2d, bs)
        except ValueError as exc:
            r.fail(f"invalid cost pair {_num(d2d)}:{_num(bs)}: {exc}", "run", "rho")
    ref = r.get("run", "rs_reference", _ints, (24, 12, 24))
    if len(ref) != 3:
        r.fail("rs_reference needs three integers n, k, m", "run", "rs_reference")
    file_symbols = r.get("run", "file_symbols", int, DEFAULT_FILE_SYMBOLS)
    if file_symbols < 1:
        r.fail("file_symbols must be positive", "run", "file_symbols")
    deltas = r.get("run", "deltas", _floats, required=True)
    if any(d < 0 for d in deltas):
        r.fail("deltas must be non-negative", "run", "deltas")
    trials = r.get("run", "trials", int, 1000)
    if trials < 1:
        r.fail("trials must be >= 1", "run", "trials")
    seed = r.get("run", "seed", int, 0)
    if seed < 0:
        r.fail("seed must be non-negative", "run", "seed")

    series = []
    for section in parser.sections():
        if section == "run":
            continue
        label = section.split(".", 1)[1]
        family = r.get(section, "family", str, required=True)
        if family not in _FAMILY_KEYS:
            r.fail(f"unknown code family {family!r}", section, "family")
        allowed = set(_FAMILY_KEYS[family]) | _SERIES_EXTRA
        for key in parser[section]:
            if key not in allowed:
                r.fail(f"unknown key '{key}' for family {family}", section, key)
        args = [r.get(section, key, int, required=True) for key in _FAMILY_KEYS[family]]
        try:
            if family == "rs":
                sc = RSScenario(*args, F=file_symbols)
            elif family == "mbr":
                sc = MBRScenario(*args, F=file_symbols)
            elif family == "msr-lr":
                sc = MSRLRScenario(*args, F=file_symbols)
            elif family == "msr-hr":
                sc = MSRHRScenario(*args, F=file_symbols)
            else:
                q, j, kk, m = args
                sc = LDPCScenario.from_array(ArrayCodeSpec(q, j, kk), m, file_symbols)
        except (ScenarioError, CodeError, ValueError) as exc:
            r.fail(f"invalid {family} code: {exc}", section)
        scale = r.get(section, "scale", float, 1.0)
        if scale <= 0:
            r.fail("scale must be positive", section, "scale")
        s_trials = r.get(section, "trials", int, None)
        if s_trials is not None and s_trials < 1:
            r.fail("trials must be >= 1", section, "trials")
        if kind == "opt-compare" and family != "ldpc":
            r.fail("opt-compare runs need LDPC series only", section, "family")
        series.append(Series(label, sc, scale, s_trials))
    if not series:
        raise ConfigError("no [series.*] sections", None, path)

    lam = r.get("run", "lambda", float, None)
    try:
        preset = ExperimentPreset(
            name=r.get("run", "name", str, "config"),
            series=tuple(series),
            deltas=deltas,
            rho_pairs=rho,
            trials=trials,
            seed=seed,
            rs_reference=ref,
            kind=kind,
            mu=r.get("run", "mu", float, 1.0),
            lam=lam,
            N=r.get("run", "n", int, 100),
            windows=r.get("run", "windows", int, 1),
            churn_mode=r.get("run", "churn_mode", str, "binomial-survival"),
            file_symbols=file_symbols,
        )
        preset.configs()
    except ValueError as exc:
        raise ConfigError(str(exc), None, path) from None
    return preset


def load_experiment(path: str) -> ExperimentPreset:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), path)


def load_config(path: str) -> list[SimConfig]:
    return load_experiment(path).configs()


def dump_config(preset: ExperimentPreset) -> str:
    """Serialise a preset; ``parse_config(dump_config(p))`` rebuilds ``p``."""
    lines = [
        "[run]",
        f"name = {preset.name}",
        f"kind = {preset.kind}",
        "deltas = " + ", ".join(_num(d) for d in preset.deltas),
        "rho = " + ", ".join(f"{_num(a)}:{_num(b)}" for a, b in preset.rho_pairs),
        f"trials = {preset.trials}",
        f"seed = {preset.seed}",
        f"mu = {_num(preset.mu)}",
    ]
    if preset.lam is not None:
        lines.append(f"lambda = {_num(preset.lam)}")
    lines += [
        f"N = {preset.N}",
        f"windows = {preset.windows}",
        f"churn_mode = {preset.churn_mode}",
        "rs_reference = " + ", ".join(str(x) for x in preset.rs_reference),
        f"file_symbols = {preset.file_symbols}",
    ]
    for s in preset.series:
        sc = s.scenario
        lines += ["", f"[series.{s.label}]", f"family = {sc.family}"]
        if sc.family == "ldpc":
            if sc.code is None:
                raise ValueError("only array-constructed LDPC codes can be written out")
            values = {"q": sc.code.q, "j": sc.code.j, "kk": sc.code.kk, "m": sc.m}
        else:
            values = {key: getattr(sc, key) for key in _FAMILY_KEYS[sc.family]}
        lines += [f"{key} = {v}" for key, v in values.items()]
        if sc.F != preset.file_symbols:
            raise ValueError("series file size differs from the preset's file_symbols")
        if s.scale != 1.0:
            lines.append(f"scale = {s.scale!r}")
        if s.trials is not None:
            lines.append(f"trials = {s.trials}")
    return "\n".join(lines) + "\n"


def with_overrides(preset: ExperimentPreset, trials: int | None = None, seed: int | None = None) -> ExperimentPreset:
    """Copy of ``preset`` where ``trials`` replaces every per-series count."""
    if trials is not None:
        if trials < 1:
            raise ValueError("trials must be >= 1")
        preset = replace(preset, trials=trials, series=tuple(replace(s, trials=None) for s in preset.series))
    if seed is not None:
        if seed < 0:
            raise ValueError("seed must be non-negative")
        preset = replace(preset, seed=seed)
    return preset
