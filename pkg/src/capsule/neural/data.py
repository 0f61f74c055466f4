"""(state, control) datasets distilled from simulated trajectories."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigError

FEATURES = ("theta", "theta_dot", "z_dot")


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray  # (N, 3): theta, theta_dot, z_dot
    y: np.ndarray  # (N,): control
    train_idx: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    test_idx: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.y)

    @property
    def is_split(self) -> bool:
        return len(self.train_idx) > 0

    def train(self) -> tuple[np.ndarray, np.ndarray]:
        return self.X[self.train_idx], self.y[self.train_idx]

    def test(self) -> tuple[np.ndarray, np.ndarray]:
        return self.X[self.test_idx], self.y[self.test_idx]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([*FEATURES, "u"])
            for row, u in zip(self.X, self.y):
                w.writerow([repr(float(v)) for v in row] + [repr(float(u))])

    @classmethod
    def from_csv(cls, path: str | Path) -> "Dataset":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = {*FEATURES, "u"} - set(reader.fieldnames or ())
            if missing:
                raise ConfigError(f"{path}: missing columns {sorted(missing)}")
            rows = [[float(r[c]) for c in (*FEATURES, "u")] for r in reader]
        if not rows:
            raise ConfigError(f"{path}: empty dataset")
        arr = np.asarray(rows)
        return cls(arr[:, :3].copy(), arr[:, 3].copy())


def build_dataset(traj) -> Dataset:
    """One row ``((theta, theta', z'), u)`` per trajectory sample; ``z`` is dropped.

    Rows with any non-finite entry are discarded.
    """
    if len(traj) == 0:
        raise ConfigError("cannot build a dataset from an empty trajectory")
    X = np.column_stack([traj.theta, traj.theta_dot, traj.z_dot]).astype(np.float64)
    y = np.asarray(traj.u, dtype=np.float64)
    keep = np.isfinite(X).all(axis=1) & np.isfinite(y)
    return Dataset(X[keep], y[keep])


def split_shuffle(d: Dataset, fraction: float = 0.8, seed: int = 0) -> Dataset:
    """Seeded permutation; the first ``floor(fraction * N)`` indices train, the rest test."""
    n = len(d)
    if n < 10:
        raise ConfigError(f"need at least 10 rows to split, got {n}")
    if not 0 < fraction < 1:
        raise ConfigError(f"split fraction must lie in (0, 1), got {fraction!r}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(np.floor(fraction * n))
    return replace(d, train_idx=perm[:n_train], test_idx=perm[n_train:], seed=seed)
