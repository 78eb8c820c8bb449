"""Flat ``key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored.  Lists are comma separated.
Unknown keys are errors.  See ``docs/config.md`` for the full key table.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..errors import ConfigError, SheetApproxError
from ..geometry import MAX_DIM
from ..integrands import SimpleFunction, parse_terms
from ..montecarlo import Family
from ..streams import SEED_MAX, InnovationLaw

EXPERIMENTS = ("simulate", "moments", "gof", "cramer-wold", "bound-scan", "appendix-checks",
               "rn-decay")


@dataclass(frozen=True)
class ExperimentConfig:
    kernel: Family
    dim: int = 1
    box: tuple = (1.0,)
    law: InnovationLaw = InnovationLaw.RADEMACHER
    integrand_text: str = ""
    q: float = 1.0
    m: tuple = (2, 4)
    n_grid: tuple = (4, 8, 16, 32)
    reps: int = 10000
    seed: int = 0
    workers: int = 1
    out: str = "out"
    alpha: float = 0.01
    experiments: tuple = ("simulate",)
    eval_point: tuple | None = None
    cw_combos: int = 10
    cw_corners: int = 3
    appendix_n: tuple = (250, 500, 1000, 2000)
    appendix_configs: int = 50
    rn_points: int = 20
    rn_n: tuple = (2, 4, 8, 16, 32, 64, 128, 256)
    block: int = 2048
    cell_budget: int = 10**7
    lattice_budget: int = 10**8
    source_text: str = field(default="", compare=False, repr=False)

    @property
    def integrand(self) -> SimpleFunction:
        if not self.integrand_text.strip():
            return SimpleFunction.constant(1.0, self.box)
        return parse_terms(self.integrand_text, self.box)

    @property
    def point(self) -> tuple:
        return self.box if self.eval_point is None else self.eval_point

    def digest(self) -> str:
        """Hash of the effective configuration (after CLI overrides)."""
        return hashlib.sha256(canonical_text(self).encode()).hexdigest()

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = replace(self, **kw)
        validate(cfg)
        return cfg


_LIST_INT = {"m", "n_grid", "appendix_n", "rn_n"}
_LIST_FLOAT = {"box", "eval_point"}
_INT = {"dim", "reps", "seed", "workers", "cw_combos", "cw_corners", "appendix_configs",
        "rn_points", "block", "cell_budget", "lattice_budget"}
_FLOAT = {"q", "alpha"}
KEYS = ({"kernel", "law", "integrand", "integrand_file", "out", "experiments"}
        | _LIST_INT | _LIST_FLOAT | _INT | _FLOAT)


def _int(key, text, lineno):
    try:
        v = int(text, 10)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects an integer, got {text!r}",
                          field=key, line=lineno) from None
    return v


def _float(key, text, lineno):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects a number, got {text!r}",
                          field=key, line=lineno) from None


def _split(text):
    return [p for p in (s.strip() for s in text.replace(";", ",").split(",")) if p]


def parse_config(text: str, base_dir: str | Path | None = None) -> ExperimentConfig:
    """Parse and validate a configuration; errors carry the key and line number."""
    raw: dict = {}
    lines: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key = value, got {body!r}", line=lineno)
        key, value = (s.strip() for s in body.split("=", 1))
        key = key.replace("-", "_")
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", field=key, line=lineno)
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", field=key, line=lineno)
        raw[key] = value
        lines[key] = lineno

    if "kernel" not in raw:
        raise ConfigError("missing required key 'kernel'", field="kernel")
    kw: dict = {"source_text": text}
    for key, value in raw.items():
        ln = lines[key]
        if key == "kernel":
            try:
                kw["kernel"] = Family.parse(value)
            except SheetApproxError as exc:
                raise ConfigError(f"line {ln}: {exc}", field="kernel", line=ln) from None
        elif key == "law":
            try:
                kw["law"] = InnovationLaw.parse(value)
            except SheetApproxError as exc:
                raise ConfigError(f"line {ln}: {exc}", field="law", line=ln) from None
        elif key == "integrand":
            kw["integrand_text"] = "\n".join(value.split(";"))
        elif key == "integrand_file":
            path = Path(value)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            try:
                kw["integrand_text"] = path.read_text()
            except OSError as exc:
                raise ConfigError(f"line {ln}: cannot read integrand file: {exc}",
                                  field="integrand_file", line=ln) from None
        elif key == "out":
            kw["out"] = value
        elif key == "experiments":
            kw["experiments"] = tuple(_split(value))
        elif key in _LIST_INT:
            kw[key] = tuple(_int(key, p, ln) for p in _split(value))
        elif key in _LIST_FLOAT:
            kw[key] = tuple(_float(key, p, ln) for p in _split(value))
        elif key in _INT:
            kw[key] = _int(key, value, ln)
        elif key in _FLOAT:
            kw[key] = _float(key, value, ln)
    if "integrand" in raw and "integrand_file" in raw:
        raise ConfigError("give either integrand or integrand_file, not both", field="integrand")

    dim = kw.get("dim", 1)
    box = kw.get("box", (1.0,))
    if len(box) == 1:
        box = box * max(dim, 1)
    kw["box"] = box
    cfg = ExperimentConfig(**kw)
    validate(cfg, lines)
    return cfg


def validate(cfg: ExperimentConfig, lines: dict | None = None) -> None:
    lines = lines or {}

    def fail(key, msg):
        ln = lines.get(key)
        where = f"line {ln}: " if ln else ""
        raise ConfigError(f"{where}{key}: {msg}", field=key, line=ln)

    if not 1 <= cfg.dim <= MAX_DIM:
        fail("dim", f"must be between 1 and {MAX_DIM}")
    if len(cfg.box) != cfg.dim:
        fail("box", f"needs {cfg.dim} values")
    if any(not v > 0 for v in cfg.box):
        fail("box", "entries must be > 0")
    if not cfg.q >= 1:
        fail("q", "must be >= 1")
    if not cfg.m:
        fail("m", "needs at least one moment order")
    for m in cfg.m:
        if m < 2 or m % 2:
            fail("m", f"moment orders must be even and >= 2, got {m}")
    if "bound-scan" in cfg.experiments and not any(m > 2 * cfg.q for m in cfg.m):
        fail("m", f"bound-scan needs some m > 2q = {2 * cfg.q}")
    if not cfg.n_grid or any(n < 1 for n in cfg.n_grid):
        fail("n_grid", "entries must be positive integers")
    if any(b <= a for a, b in zip(cfg.n_grid, cfg.n_grid[1:])):
        fail("n_grid", "must be strictly increasing")
    if cfg.reps < 1:
        fail("reps", "must be >= 1")
    if not 0 <= cfg.seed <= SEED_MAX:
        fail("seed", "must be an unsigned 64-bit integer")
    if cfg.workers < 1:
        fail("workers", "must be >= 1")
    if not 0 < cfg.alpha < 1:
        fail("alpha", "must lie in (0, 1)")
    for e in cfg.experiments:
        if e not in EXPERIMENTS:
            fail("experiments", f"unknown experiment {e!r}; choose from {', '.join(EXPERIMENTS)}")
    if cfg.eval_point is not None:
        if len(cfg.eval_point) != cfg.dim:
            fail("eval_point", f"needs {cfg.dim} values")
        if any(v < 0 or v > b for v, b in zip(cfg.eval_point, cfg.box)):
            fail("eval_point", "must lie in the box")
    if not 1 <= cfg.cw_corners <= 8:
        fail("cw_corners", "must be between 1 and 8")
    if cfg.cw_combos < 1:
        fail("cw_combos", "must be >= 1")
    if cfg.block < 1:
        fail("block", "must be >= 1")
    try:
        cfg.integrand
    except SheetApproxError as exc:
        fail("integrand", str(exc))


def canonical_text(cfg: ExperimentConfig) -> str:
    """Deterministic ``key = value`` rendering of every effective setting."""
    def fmt(v):
        if isinstance(v, tuple):
            return ",".join(fmt(x) for x in v)
        if isinstance(v, float):
            return format(v, ".17g")
        if hasattr(v, "value"):
            return str(v.value)
        return str(v)

    out = []
    for name in ExperimentConfig.__dataclass_fields__:
        if name in ("source_text", "out", "workers"):
            continue
        v = getattr(cfg, name)
        if name == "integrand_text":
            v = cfg.integrand.to_text().replace("\n", ";")
        out.append(f"{name} = {fmt(v) if v is not None else ''}")
    return "\n".join(out) + "\n"


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", field="config") from None
    return parse_config(text, base_dir=path.parent)
