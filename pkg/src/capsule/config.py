"""Run configuration: TOML file -> validated :class:`RunConfig`.

Every section is optional; missing keys take the nominal defaults. Unknown
sections or keys are rejected so that typos do not silently fall back to
defaults. Example::

    [capsule]
    gamma = 10.0
    rho = 2.5
    nu = 1.0
    mu = 0.3

    [fourier]
    a0 = 1.62506
    omega = 1.64722
    a = [-3.43222, -1.95285, -0.68182, 0.38493, 0.17389]
    b = [-0.41690, 0.12411, -0.10468, 0.13722, 0.27902]

    [seeds]
    split = 0
    train = 0
    sweep = 0
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .control import PUBLISHED_A, PUBLISHED_A0, PUBLISHED_B, PUBLISHED_OMEGA, U_MAX, U_MIN, FourierControl
from .errors import ConfigError
from .model import CapsuleParams
from .neural import GridSpec, Mlp, TrainConfig
from .robustness import default_deltas
from .sim import SimConfig


@dataclass(frozen=True)
class FourierSpec:
    a0: float = PUBLISHED_A0
    omega: float = PUBLISHED_OMEGA
    a: tuple[float, ...] = PUBLISHED_A
    b: tuple[float, ...] = PUBLISHED_B
    u_min: float = U_MIN
    u_max: float = U_MAX
    halve_a0: bool = False

    def build(self) -> FourierControl:
        return FourierControl(self.a0, self.omega, self.a, self.b, self.u_min, self.u_max, self.halve_a0)


@dataclass(frozen=True)
class NetSpec:
    hidden_act: str = "relu"
    output_act: str = "linear"
    neurons: int = 50
    split_fraction: float = 0.8

    def validate(self) -> None:
        Mlp.init(self.neurons, self.hidden_act, self.output_act, 0)
        if not 0 < self.split_fraction < 1:
            raise ConfigError("split_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class SweepSpec:
    deltas: tuple[float, ...] = default_deltas()
    trials: int = 30
    jobs: int = 1

    def validate(self, mu: float) -> None:
        if self.trials < 2:
            raise ConfigError("sweep trials must be >= 2")
        if self.jobs < 1:
            raise ConfigError("sweep jobs must be >= 1")
        if not self.deltas:
            raise ConfigError("sweep needs at least one delta")
        for d in self.deltas:
            if not 0 <= d <= mu:
                raise ConfigError(f"sweep delta {d} outside [0, mu={mu}]")


@dataclass(frozen=True)
class Seeds:
    split: int = 0
    train: int = 0
    sweep: int = 0

    def validate(self) -> None:
        for name, v in asdict(self).items():
            if not 0 <= v < 2**32:
                raise ConfigError(f"seed {name} must lie in [0, 2**32), got {v}")


@dataclass(frozen=True)
class RunConfig:
    capsule: CapsuleParams = field(default_factory=CapsuleParams)
    sim: SimConfig = field(default_factory=SimConfig)
    fourier: FourierSpec = field(default_factory=FourierSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    net: NetSpec = field(default_factory=NetSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    grid_jobs: int = 1
    sweep: SweepSpec = field(default_factory=SweepSpec)
    seeds: Seeds = field(default_factory=Seeds)
    out_dir: str = "out"

    def __post_init__(self):
        self.fourier.build()
        self.net.validate()
        self.sweep.validate(self.capsule.mu)
        self.seeds.validate()
        if self.grid_jobs < 1:
            raise ConfigError("grid jobs must be >= 1")

    def with_seed(self, seed: int) -> "RunConfig":
        """Every seed (split, training, sweep) set to ``seed``."""
        return replace(self, seeds=Seeds(seed, seed, seed))

    def train_config(self) -> TrainConfig:
        return replace(self.train, seed=self.seeds.train)

    def to_dict(self) -> dict:
        """Everything that affects results; the output directory is left out."""
        d = {
            "capsule": asdict(self.capsule),
            "sim": asdict(self.sim),
            "fourier": asdict(self.fourier),
            "train": asdict(self.train_config()),
            "net": asdict(self.net),
            "grid": asdict(self.grid),
            "sweep": asdict(self.sweep),
            "seeds": asdict(self.seeds),
        }
        d["sweep"].pop("jobs")
        return json.loads(json.dumps(d))  # tuples -> lists

    def hash(self) -> str:
        return config_hash(self.to_dict())


def config_hash(d: dict) -> str:
    canonical = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


_SECTIONS = {"capsule", "sim", "fourier", "train", "grid", "sweep", "seeds", "output"}
_TRAIN_NET_KEYS = {"hidden_act", "output_act", "neurons", "split_fraction"}


def _take(section: str, raw: dict, allowed) -> dict:
    unknown = set(raw) - set(allowed)
    if unknown:
        raise ConfigError(f"[{section}] unknown keys: {', '.join(sorted(unknown))}")
    return dict(raw)


def _names(cls) -> set[str]:
    return {f.name for f in fields(cls) if f.init}


def from_dict(raw: dict) -> RunConfig:
    unknown = set(raw) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {', '.join(sorted(unknown))}")
    try:
        capsule = CapsuleParams(**_take("capsule", raw.get("capsule", {}), _names(CapsuleParams)))
        sim = SimConfig(**_take("sim", raw.get("sim", {}), _names(SimConfig)))
        f = _take("fourier", raw.get("fourier", {}), _names(FourierSpec))
        for k in ("a", "b"):
            if k in f:
                f[k] = tuple(float(v) for v in f[k])
        fourier = FourierSpec(**f)
        t = _take("train", raw.get("train", {}), (_names(TrainConfig) - {"seed"}) | _TRAIN_NET_KEYS)
        net = NetSpec(**{k: t.pop(k) for k in list(t) if k in _TRAIN_NET_KEYS})
        train = TrainConfig(**t)
        g = _take("grid", raw.get("grid", {}), _names(GridSpec) | {"jobs"})
        grid_jobs = int(g.pop("jobs", 1))
        grid = GridSpec(**{k: tuple(v) if isinstance(v, list) else v for k, v in g.items()})
        s = _take("sweep", raw.get("sweep", {}), _names(SweepSpec))
        if "deltas" in s:
            s["deltas"] = tuple(float(v) for v in s["deltas"])
        sweep_spec = SweepSpec(**s)
        seeds = Seeds(**_take("seeds", raw.get("seeds", {}), _names(Seeds)))
        out = _take("output", raw.get("output", {}), {"dir"})
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    return RunConfig(capsule, sim, fourier, train, net, grid, grid_jobs, sweep_spec, seeds,
                     str(out.get("dir", "out")))


def load_config(path: str | Path | None) -> RunConfig:
    """Read a TOML file; ``None`` gives the nominal configuration."""
    if path is None:
        return RunConfig()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    return from_dict(raw)
