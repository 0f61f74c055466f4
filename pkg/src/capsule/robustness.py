"""Friction perturbation study.

The friction coefficient along the path is piecewise constant: every segment
of length ``segment_len`` gets its own value drawn uniformly from
``[mu - delta, mu + delta]``. Draws come from a counter-based hash of
``(seed, segment index)``, so a segment's value does not depend on the order
in which segments are visited.

:func:`sweep` runs both controllers over a range of ``delta`` values with
paired trial seeds, so at every ``(delta, trial)`` the two controllers drive
over the same friction realization.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._rng import counter_uniform
from .errors import CapsuleError, ConfigError
from .model import CapsuleParams, State
from .sim import SimConfig, distance, simulate

SEGMENT_LEN = 0.1
SWEEP_COLUMNS = (
    "delta", "ol_mean", "ol_sd", "ol_rel_pct", "nn_mean", "nn_sd", "nn_rel_pct",
    "cross_rel_pct", "trials", "base_seed",
)
MIN_SUCCESS_FRACTION = 0.9


@dataclass
class FrictionField:
    """Seeded, segment-wise constant friction coefficient."""

    mu: float
    delta: float
    seed: int
    segment_len: float = SEGMENT_LEN
    cache: dict[int, float] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.mu > 0:
            raise ConfigError(f"mu must be > 0, got {self.mu!r}")
        if not 0 <= self.delta <= self.mu:
            raise ConfigError(f"delta must lie in [0, mu={self.mu}], got {self.delta!r}")
        if not self.segment_len > 0:
            raise ConfigError("segment_len must be > 0")
        if not 0 <= int(self.seed) < 2**53:
            raise ConfigError("seed must lie in [0, 2**53)")
        self.seed = int(self.seed)

    def segment(self, z: float) -> int:
        return math.floor(z / self.segment_len)

    def mu_at(self, z: float) -> float:
        if self.delta == 0:
            return self.mu
        idx = self.segment(z)
        value = self.cache.get(idx)
        if value is None:
            # same expression as the compiled lookup in capsule.sim
            value = self.mu + self.delta * (2.0 * counter_uniform(np.uint64(self.seed), np.int64(idx)) - 1.0)
            self.cache[idx] = value
        return value


def run_trial(controller, p: CapsuleParams, cfg: SimConfig, delta: float, trial_seed: int,
              initial: State | None = None) -> float:
    """Distance covered over one random friction realization."""
    fld = FrictionField(p.mu, delta, trial_seed)
    try:
        return distance(simulate(initial or State(), controller, p, cfg, field=fld))
    except CapsuleError as exc:
        raise type(exc)(f"trial seed {trial_seed}: {exc}") from exc


def trial_seed(base_seed: int, i_delta: int, trial: int) -> int:
    """Seed for trial ``trial`` at the ``i_delta``-th delta; shared by both controllers."""
    ss = np.random.SeedSequence([int(base_seed), int(i_delta), int(trial)])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(11))


def default_deltas() -> tuple[float, ...]:
    return tuple(round(0.01 * i, 2) for i in range(21))


@dataclass(frozen=True)
class SweepRow:
    delta: float
    ol_mean: float
    ol_sd: float
    ol_rel_pct: float
    nn_mean: float
    nn_sd: float
    nn_rel_pct: float
    cross_rel_pct: float
    trials: int
    base_seed: int
    ol_failures: int = 0
    nn_failures: int = 0

    def csv_row(self) -> list[str]:
        return [repr(float(getattr(self, c))) if c not in ("trials", "base_seed") else str(getattr(self, c))
                for c in SWEEP_COLUMNS]


@dataclass
class SweepResult:
    rows: list[SweepRow]
    ol_nominal: float
    nn_nominal: float
    skipped: list[float]  # deltas whose success rate fell below the threshold
    errors: list[str]

    def to_csv(self, path: str | Path) -> None:
        write_sweep_csv(self.rows, path)


def _rel(a: float, ref: float) -> float:
    # undefined against a zero reference (a controller that never moves)
    return 100.0 * (a - ref) / ref if ref != 0 else float("nan")


def _stats(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std(ddof=1)) if len(arr) > 1 else 0.0


def _trial_task(args):
    which, controller, p, cfg, delta, seed = args
    try:
        return which, run_trial(controller, p, cfg, delta, seed), None
    except CapsuleError as exc:
        return which, float("nan"), str(exc)


def sweep(ol, nn, p: CapsuleParams, cfg: SimConfig = SimConfig(), deltas=None, trials: int = 30,
          base_seed: int = 0, jobs: int = 1) -> SweepResult:
    """Mean and sample SD of the distance for both controllers at every ``delta``.

    Relative changes are taken against each controller's unperturbed distance;
    the cross column compares the neural mean with the open-loop mean at the
    same ``delta``; against a zero reference they are NaN. A row is emitted
    only when at least 90 % of the trials of both controllers succeed. Results
    are independent of ``jobs``.
    """
    if trials < 2:
        raise ConfigError("trials must be >= 2 for a sample standard deviation")
    deltas = default_deltas() if deltas is None else tuple(float(d) for d in deltas)
    for d in deltas:
        if not 0 <= d <= p.mu:
            raise ConfigError(f"delta {d} outside [0, mu={p.mu}]")
    ol_nominal = distance(simulate(State(), ol, p, cfg))
    nn_nominal = distance(simulate(State(), nn, p, cfg))

    tasks = []
    for i, d in enumerate(deltas):
        for t in range(trials):
            s = trial_seed(base_seed, i, t)
            tasks.append(("ol", ol, p, cfg, d, s))
            tasks.append(("nn", nn, p, cfg, d, s))
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial_task, tasks, chunksize=8))
    else:
        results = [_trial_task(t) for t in tasks]

    rows, skipped, errors = [], [], []
    per_delta = 2 * trials
    for i, d in enumerate(deltas):
        chunk = results[i * per_delta : (i + 1) * per_delta]
        got = {"ol": [], "nn": []}
        for which, value, err in chunk:
            if err is None:
                got[which].append(value)
            else:
                errors.append(f"delta={d} {which}: {err}")
        n_ok = min(len(got["ol"]), len(got["nn"]))
        if n_ok < max(2, math.ceil(MIN_SUCCESS_FRACTION * trials)):
            skipped.append(d)
            continue
        ol_mean, ol_sd = _stats(got["ol"])
        nn_mean, nn_sd = _stats(got["nn"])
        rows.append(SweepRow(
            d, ol_mean, ol_sd, _rel(ol_mean, ol_nominal), nn_mean, nn_sd, _rel(nn_mean, nn_nominal),
            _rel(nn_mean, ol_mean), trials, int(base_seed),
            trials - len(got["ol"]), trials - len(got["nn"]),
        ))
    return SweepResult(rows, ol_nominal, nn_nominal, skipped, errors)


def write_sweep_csv(rows: list[SweepRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow(r.csv_row())


def read_sweep_csv(path: str | Path) -> list[SweepRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SWEEP_COLUMNS:
            raise ConfigError(f"{path}: expected header {','.join(SWEEP_COLUMNS)}")
        return [
            SweepRow(**{k: (int(v) if k in ("trials", "base_seed") else float(v)) for k, v in r.items()})
            for r in reader
        ]
