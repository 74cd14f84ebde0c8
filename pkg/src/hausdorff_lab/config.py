"""Experiment configuration: one JSON document shared by every subcommand."""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .gridfn import GridSpec
from .kernel import REGISTRY, Kernel, KernelError, make_named_kernel

THREADS_ENV = "HAUSDORFF_LAB_THREADS"


class ConfigError(ValueError):
    """Schema violation; the CLI maps it to exit status 2."""


@dataclass(frozen=True)
class KernelSpec:
    name: str = "box"
    params: tuple = ()
    n: int = 1


@dataclass(frozen=True)
class ToleranceSpec:
    quadrature: float = 1e-10
    duality: float | None = None
    fourier: float | None = None
    hilbert: float | None = None
    upper_lp: float = 0.02
    upper_star: float = 0.05
    sup: float = 0.02


@dataclass(frozen=True)
class ExperimentConfig:
    kernel: KernelSpec = field(default_factory=KernelSpec)
    grid: dict = field(default_factory=lambda: {"L": [512.0], "N": [65536]})
    p_list: tuple = (1.0, 1.5, 2.0, 3.0, math.inf)
    eps_schedule: tuple = (0.1, 0.01, 0.001)
    h1_eps_schedule: tuple | None = (0.2, 0.1, 0.05)
    delta: float = 0.25
    tolerances: ToleranceSpec = field(default_factory=ToleranceSpec)
    outputs: str = "results"
    seed: int = 0
    threads: int = 0

    def grid_spec(self) -> GridSpec:
        return GridSpec(tuple(self.grid["L"]), tuple(self.grid["N"]))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p_list"] = ["inf" if math.isinf(p) else p for p in self.p_list]
        d["kernel"]["params"] = list(self.kernel.params)
        for key in ("eps_schedule", "h1_eps_schedule"):
            if d[key] is not None:
                d[key] = list(d[key])
        d.pop("threads")  # execution detail, not part of the experiment identity
        return d

    def resolved_tolerances(self):
        from .verify import Tolerances

        base = Tolerances.for_dimension(self.kernel.n)
        t = self.tolerances
        return Tolerances(
            duality=t.duality if t.duality is not None else base.duality,
            fourier=t.fourier if t.fourier is not None else base.fourier,
            hilbert=t.hilbert if t.hilbert is not None else base.hilbert,
            upper_lp=t.upper_lp, upper_star=t.upper_star, sup=t.sup)


_TOP_KEYS = {"kernel", "grid", "p_list", "eps_schedule", "h1_eps_schedule", "delta",
             "tolerances", "outputs", "seed"}


def _p_value(p) -> float:
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity"):
            return math.inf
        raise ConfigError(f"bad p value {p!r}")
    if isinstance(p, bool) or not isinstance(p, (int, float)):
        raise ConfigError(f"bad p value {p!r}")
    return float(p)


def _pow2(N: int) -> bool:
    return N >= 2 and N & (N - 1) == 0


def _positive(x, what) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not x > 0:
        raise ConfigError(f"{what} must be a positive number")
    return float(x)


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a decoded JSON document and build the config."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    kd = doc.get("kernel", {})
    if not isinstance(kd, dict):
        raise ConfigError("kernel must be an object")
    name = kd.get("name", "box")
    if name not in REGISTRY:
        raise ConfigError(f"unknown kernel {name!r}; registry: {sorted(REGISTRY)}")
    params = kd.get("params", [])
    if not isinstance(params, list):
        raise ConfigError("kernel.params must be a list")
    n = kd.get("n", 1)
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError("kernel.n must be a positive integer")
    kernel = KernelSpec(name, tuple(float(_number(v)) for v in params), n)
    try:
        make_named_kernel(kernel.name, kernel.params, kernel.n)
    except (KernelError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad kernel parameters: {exc}") from exc

    default_grid = {"L": [512.0] if n == 1 else [64.0] * n,
                    "N": [65536] if n == 1 else [2048] * n}
    grid = doc.get("grid", default_grid)
    if not isinstance(grid, dict) or set(grid) != {"L", "N"}:
        raise ConfigError("grid must be an object with keys L and N")
    L = grid["L"] if isinstance(grid["L"], list) else [grid["L"]] * n
    N = grid["N"] if isinstance(grid["N"], list) else [grid["N"]] * n
    if len(L) != n or len(N) != n:
        raise ConfigError("grid.L and grid.N need one entry per axis")
    L = [_positive(x, "grid.L") for x in L]
    for x in N:
        if isinstance(x, bool) or not isinstance(x, int) or not _pow2(x):
            raise ConfigError("grid.N entries must be powers of two")

    p_list = tuple(_p_value(p) for p in doc.get("p_list", [1, 1.5, 2, 3, "inf"]))
    if not p_list or any(not p >= 1 for p in p_list):
        raise ConfigError("p_list must be a non-empty subset of [1, inf]")

    def schedule(key, default):
        eps = doc.get(key, default)
        if eps is None:
            return None
        if not isinstance(eps, list) or not eps:
            raise ConfigError(f"{key} must be a non-empty list")
        eps = [_positive(e, key) for e in eps]
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError(f"{key} must be strictly decreasing")
        return tuple(eps)

    eps_schedule = schedule("eps_schedule", [0.1, 0.01, 0.001])
    h1_eps = schedule("h1_eps_schedule", [0.2, 0.1, 0.05])
    delta = _positive(doc.get("delta", 0.25), "delta")
    if delta >= 1:
        raise ConfigError("delta must lie in (0, 1)")

    td = doc.get("tolerances", {})
    if not isinstance(td, dict):
        raise ConfigError("tolerances must be an object")
    allowed = set(ToleranceSpec.__dataclass_fields__)
    if set(td) - allowed:
        raise ConfigError(f"unknown tolerance keys: {sorted(set(td) - allowed)}")
    # null means "use the default for this dimension"
    tol = ToleranceSpec(**{k: _positive(v, f"tolerances.{k}") for k, v in td.items()
                           if v is not None})

    outputs = doc.get("outputs", "results")
    if not isinstance(outputs, str) or not outputs:
        raise ConfigError("outputs must be a directory path")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    return ExperimentConfig(kernel, {"L": L, "N": list(N)}, p_list, eps_schedule, h1_eps,
                            delta, tol, outputs, seed)


def _number(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError("kernel parameters must be numbers")
    return v


def load_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(doc)


def resolve_threads(flag: int | None) -> int:
    """--threads wins, then the environment variable, then 1."""
    if flag is not None:
        if flag < 1:
            raise ConfigError("--threads must be positive")
        return flag
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            v = int(env)
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer") from exc
        if v < 1:
            raise ConfigError(f"{THREADS_ENV} must be positive")
        return v
    return 1


def build_kernel(cfg: ExperimentConfig) -> Kernel:
    return make_named_kernel(cfg.kernel.name, cfg.kernel.params, cfg.kernel.n)
