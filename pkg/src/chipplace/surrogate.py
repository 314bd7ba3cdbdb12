"""Gaussian RBF-network surrogate for the peak temperature of a placement.

Features are the effective width, height and center of every chiplet (power
is left out, so a model belongs to one system). Centers come from K-means,
a single shared width from the spread of those centers, and the output
weights (plus a bias) from a pseudo-inverse least-squares fit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .geometry import Placement

LOCAL_NEIGHBORHOOD = 500
N_BINS = 10


class DegenerateInput(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


def featurize(p: Placement) -> np.ndarray:
    out = np.empty(4 * len(p.chiplets))
    for i, (c, (x, y)) in enumerate(zip(p.chiplets, p.centers)):
        w, h = c.dims
        out[4 * i:4 * i + 4] = (w, h, x, y)
    return out


# -- K-means ---------------------------------------------------------------

@dataclass
class KMeansResult:
    centers: np.ndarray
    labels: np.ndarray
    sse_history: list[float]
    iterations: int


def lloyd(points, k: int, seed=None, max_iter: int = 300) -> KMeansResult:
    """Lloyd's algorithm from ``k`` distinct randomly chosen points.

    Stops when the assignment stops changing. A cluster that empties out is
    re-seeded at the point currently farthest from its own center.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch("points must be a 2-D array")
    distinct = np.unique(X, axis=0)
    if k < 1 or len(distinct) < k:
        raise DegenerateInput(f"need at least k={k} distinct points, got {len(distinct)}")
    rng = np.random.default_rng(seed)
    centers = distinct[np.sort(rng.choice(len(distinct), size=k, replace=False))].copy()

    labels = None
    history: list[float] = []
    it = 0
    for it in range(1, max_iter + 1):
        d2 = cdist(X, centers, "sqeuclidean")
        new_labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(X)), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        counts = np.bincount(labels, minlength=k)
        for j in np.flatnonzero(counts == 0):
            own = cdist(X, centers, "sqeuclidean")[np.arange(len(X)), labels]
            own[counts[labels] <= 1] = -1.0  # never empty another cluster
            far = int(np.argmax(own))
            labels[far] = j
            counts = np.bincount(labels, minlength=k)
        for j in range(k):
            centers[j] = X[labels == j].mean(axis=0)
    d2 = cdist(X, centers, "sqeuclidean")
    labels = np.argmin(d2, axis=1)
    return KMeansResult(centers, labels, history, it)


def kmeans(points, k: int, seed=None, max_iter: int = 300) -> np.ndarray:
    return lloyd(points, k, seed, max_iter).centers


# -- width -----------------------------------------------------------------

WIDTH_RULES = ("mean", "dmax")


def width_from_centers(centers, rule: str = "mean") -> float:
    """Shared Gaussian width from the pairwise distances between centers.

    ``"mean"`` uses the mean pairwise distance; ``"dmax"`` the classical
    ``d_max / sqrt(2k)``. Falls back to 1.0 for a single center or when all
    centers coincide.
    """
    C = np.asarray(centers, dtype=float)
    k = len(C)
    if k < 2:
        return 1.0
    d = pdist(C)
    dmax = d.max()
    if dmax == 0:
        return 1.0
    if rule == "dmax":
        return float(dmax / np.sqrt(2 * k))
    if rule == "mean":
        return float(d.mean())
    raise ValueError(f"unknown width rule {rule!r}")


# -- model -----------------------------------------------------------------

@dataclass(frozen=True)
class RbfModel:
    centers: np.ndarray
    width: float
    weights: np.ndarray  # k basis weights followed by the bias
    train_rmse: float = 0.0
    # optional min-max feature scaling applied before the kernel
    offset: np.ndarray | None = None
    scale: np.ndarray | None = None

    @property
    def k(self) -> int:
        return len(self.centers)

    @property
    def bias(self) -> float:
        return float(self.weights[-1])

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def _prep(self, X: np.ndarray) -> np.ndarray:
        if self.offset is not None:
            X = (X - self.offset) / self.scale
        return X

    def predict_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise DimensionMismatch(f"expected {self.dim} features, got {X.shape[1]}")
        return design_matrix(self._prep(X), self.centers, self.width) @ self.weights


def design_matrix(X: np.ndarray, centers: np.ndarray, width: float) -> np.ndarray:
    phi = np.exp(-cdist(X, centers, "sqeuclidean") / width ** 2)
    return np.hstack([phi, np.ones((len(X), 1))])


def predict(model: RbfModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch("predict takes a single feature vector")
    return float(model.predict_many(x[None, :])[0])


def default_k(n_samples: int, cap: int = 25) -> int:
    return max(1, min(cap, n_samples // 4))


def train(X, T, k: int, seed=None, width_rule: str = "mean", width: float | None = None,
          normalize: bool = False) -> RbfModel:
    X = np.asarray(X, dtype=float)
    T = np.asarray(T, dtype=float)
    if len(X) != len(T):
        raise DimensionMismatch("features and targets differ in length")
    if k < 1 or len(X) < k:
        raise DegenerateInput(f"need at least k={k} samples, got {len(X)}")
    offset = scale = None
    if normalize:
        offset = X.min(axis=0)
        scale = X.max(axis=0) - offset
        scale[scale == 0] = 1.0
        X = (X - offset) / scale
    centers = kmeans(X, k, seed)
    sigma = width if width is not None else width_from_centers(centers, width_rule)
    Phi = design_matrix(X, centers, sigma)
    w = np.linalg.pinv(Phi) @ T
    rmse = float(np.sqrt(np.mean((Phi @ w - T) ** 2)))
    return RbfModel(centers, sigma, w, rmse, offset, scale)


# -- sample archive --------------------------------------------------------

@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    temperature: float
    wirelength: float
    step: int


@dataclass
class SampleStore:
    """Append-only archive of oracle-evaluated placements."""

    samples: list[Sample] = field(default_factory=list)
    _X: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.samples)

    def add(self, features, temperature: float, wirelength: float, step: int) -> None:
        self.samples.append(Sample(np.asarray(features, dtype=float).copy(),
                                   float(temperature), float(wirelength), int(step)))
        self._X = None

    @property
    def X(self) -> np.ndarray:
        if self._X is None:
            self._X = np.array([s.features for s in self.samples])
        return self._X

    @property
    def T(self) -> np.ndarray:
        return np.array([s.temperature for s in self.samples])

    def save_csv(self, path: str | Path) -> None:
        n = self.X.shape[1] if self.samples else 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "temperature", "wirelength"] + [f"f{i}" for i in range(n)])
            for s in self.samples:
                w.writerow([s.step, repr(s.temperature), repr(s.wirelength)]
                           + [repr(float(v)) for v in s.features])

    @classmethod
    def load_csv(cls, path: str | Path) -> "SampleStore":
        store = cls()
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), 1):
                if not row or row[0] == "step":
                    continue
                try:
                    vals = [float(v) for v in row]
                except ValueError as e:
                    raise ValueError(f"{path}:{lineno}: {e}") from None
                if len(vals) < 4:
                    raise ValueError(f"{path}:{lineno}: expected step, temperature, wirelength and features")
                store.add(vals[3:], vals[1], vals[2], int(vals[0]))
        return store


def select_global_training_set(store: SampleStore, per_bin: int = 40) -> list[int]:
    """Indices of a temperature-stratified training set.

    Samples are split into ten equal-width temperature bins over the observed
    range and up to ``per_bin`` of the most recent are kept from each bin.
    Returned indices are in ascending order of temperature.
    """
    if not store.samples:
        raise DegenerateInput("empty sample store")
    T = store.T
    lo, hi = T.min(), T.max()
    if hi > lo:
        bins = np.minimum(((T - lo) / (hi - lo) * N_BINS).astype(int), N_BINS - 1)
    else:
        bins = np.zeros(len(T), dtype=int)
    chosen: list[int] = []
    for b in range(N_BINS):
        members = np.flatnonzero(bins == b)
        chosen.extend(members[::-1][:per_bin].tolist())
    return sorted(chosen, key=lambda i: (T[i], i))


def nearest_indices(store: SampleStore, x, limit: int = LOCAL_NEIGHBORHOOD) -> np.ndarray:
    d = np.linalg.norm(store.X - np.asarray(x, dtype=float), axis=1)
    return np.argsort(d, kind="stable")[:limit]


@dataclass(frozen=True)
class SurrogateConfig:
    per_bin: int = 40
    k_cap: int = 25
    local_neighborhood: int = LOCAL_NEIGHBORHOOD
    width_rule: str = "mean"
    normalize: bool = False


def train_global(store: SampleStore, cfg: SurrogateConfig = SurrogateConfig(), seed=None) -> RbfModel:
    idx = select_global_training_set(store, cfg.per_bin)
    X, T = store.X[idx], store.T[idx]
    k = min(default_k(len(idx), cfg.k_cap), len(np.unique(X, axis=0)))
    return train(X, T, k, seed, cfg.width_rule, normalize=cfg.normalize)


def train_local(store: SampleStore, x, k_local: int | None = None, seed=None,
                cfg: SurrogateConfig = SurrogateConfig()) -> RbfModel:
    """Fit a model on the samples nearest to ``x`` in feature space."""
    idx = nearest_indices(store, x, cfg.local_neighborhood)
    if k_local is None:
        k_local = default_k(len(idx), cfg.k_cap)
    if len(store) < k_local:
        raise DegenerateInput(f"store holds {len(store)} samples, need {k_local}")
    return train(store.X[idx], store.T[idx], k_local, seed, cfg.width_rule, normalize=cfg.normalize)


def local_use_flag(t_annealing: float) -> float:
    """Probability threshold above which a local model is used instead of the global one."""
    if 0.2 < t_annealing <= 0.7:
        return 0.9
    if 0.08 < t_annealing <= 0.2:
        return 0.8
    if t_annealing <= 0.08:
        return 0.7
    return 1.0


def choose_and_predict(t_annealing: float, x, global_model: RbfModel, store: SampleStore,
                       rng: np.random.Generator,
                       cfg: SurrogateConfig = SurrogateConfig()) -> tuple[float, bool]:
    flag = local_use_flag(t_annealing)
    f = rng.random()
    if flag < f:
        seed = int(rng.integers(2**32))
        try:
            local = train_local(store, x, seed=seed, cfg=cfg)
        except DegenerateInput:
            pass
        else:
            return predict(local, x), True
    return predict(global_model, x), False
