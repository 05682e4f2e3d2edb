"""Offer-acceptance learning from historical offer outcomes.

Departments never observe acceptance probabilities; they estimate them from
the offers they and their peers extended in past cycles. The default learner
is an L2-regularized logistic regression fit by full-batch Newton iteration,
which is deterministic given the data: no stochastic optimizer is involved,
so refits on identical histories reproduce bit-identical coefficients. A
small one-hidden-layer perceptron is available behind the same interface.

Uncertainty in the estimated probabilities is carried by a bootstrap
ensemble: B with-replacement resamples of the history, one fitted model per
resample.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit

from .model import OfferRecord

__all__ = [
    "FEATURE_NAMES",
    "HISTORY_CSV_HEADER",
    "History",
    "LearnerSpec",
    "ConstantModel",
    "LogisticModel",
    "MLPModel",
    "design_matrix",
    "fit_acceptance_model",
    "BootstrapEnsemble",
    "bootstrap_ensemble",
    "predict_expected_utilities",
]

# Versioned feature layout. Models are only comparable when trained on the
# same layout, so this tuple is part of the learning contract.
FEATURE_NAMES = ("s", "vbar", "f", "s_f", "vbar_f")

HISTORY_CSV_HEADER = ("year", "dept_id", "cand_id", "s", "vbar", "f", "offered", "accepted")

# Predictions stay strictly inside (0, 1); constant fallbacks are pinned
# well away from the boundary so expected utilities never become exact zeros.
_PRED_CLIP = 1e-9
_CONSTANT_CLIP = (0.01, 0.99)


@dataclass
class History:
    """Columnar store of every offer ever extended, across burn-in and main years."""

    year: np.ndarray
    dept_id: np.ndarray
    cand_id: np.ndarray
    s: np.ndarray
    vbar: np.ndarray
    f: np.ndarray
    offered: np.ndarray
    accepted: np.ndarray

    @classmethod
    def empty(cls) -> "History":
        return cls(
            year=np.empty(0, dtype=np.int64),
            dept_id=np.empty(0, dtype=np.int64),
            cand_id=np.empty(0, dtype=np.int64),
            s=np.empty(0, dtype=float),
            vbar=np.empty(0, dtype=float),
            f=np.empty(0, dtype=float),
            offered=np.empty(0, dtype=bool),
            accepted=np.empty(0, dtype=bool),
        )

    @classmethod
    def from_records(cls, records: Iterable[OfferRecord]) -> "History":
        records = list(records)
        return cls(
            year=np.array([r.year for r in records], dtype=np.int64),
            dept_id=np.array([r.dept_id for r in records], dtype=np.int64),
            cand_id=np.array([r.cand_id for r in records], dtype=np.int64),
            s=np.array([r.s for r in records], dtype=float),
            vbar=np.array([r.vbar for r in records], dtype=float),
            f=np.array([r.f for r in records], dtype=float),
            offered=np.array([r.offered for r in records], dtype=bool),
            accepted=np.array([r.accepted for r in records], dtype=bool),
        )

    def extend(self, records: Iterable[OfferRecord]) -> "History":
        other = History.from_records(records)
        return History(
            year=np.concatenate([self.year, other.year]),
            dept_id=np.concatenate([self.dept_id, other.dept_id]),
            cand_id=np.concatenate([self.cand_id, other.cand_id]),
            s=np.concatenate([self.s, other.s]),
            vbar=np.concatenate([self.vbar, other.vbar]),
            f=np.concatenate([self.f, other.f]),
            offered=np.concatenate([self.offered, other.offered]),
            accepted=np.concatenate([self.accepted, other.accepted]),
        )

    def __len__(self) -> int:
        return int(self.year.size)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(HISTORY_CSV_HEADER)
            for i in range(len(self)):
                writer.writerow(
                    [
                        int(self.year[i]),
                        int(self.dept_id[i]),
                        int(self.cand_id[i]),
                        repr(float(self.s[i])),
                        repr(float(self.vbar[i])),
                        repr(float(self.f[i])),
                        int(self.offered[i]),
                        int(self.accepted[i]),
                    ]
                )

    @classmethod
    def from_csv(cls, path) -> "History":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            if header != HISTORY_CSV_HEADER:
                raise ValueError(f"unexpected history header: {header}")
            rows = list(reader)
        cols = list(zip(*rows)) if rows else [[] for _ in HISTORY_CSV_HEADER]
        return cls(
            year=np.array(cols[0], dtype=np.int64),
            dept_id=np.array(cols[1], dtype=np.int64),
            cand_id=np.array(cols[2], dtype=np.int64),
            s=np.array(cols[3], dtype=float),
            vbar=np.array(cols[4], dtype=float),
            f=np.array(cols[5], dtype=float),
            offered=np.array(cols[6], dtype=np.int64).astype(bool),
            accepted=np.array(cols[7], dtype=np.int64).astype(bool),
        )


def design_matrix(s: np.ndarray, vbar: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Intercept plus the versioned feature columns, in FEATURE_NAMES order."""
    s, vbar, f = np.broadcast_arrays(
        np.asarray(s, dtype=float), np.asarray(vbar, dtype=float), np.asarray(f, dtype=float)
    )
    return np.column_stack([np.ones_like(s), s, vbar, f, s * f, vbar * f])


@dataclass(frozen=True)
class LearnerSpec:
    """Which learner to fit and how.

    reg_scale sets the ridge penalty as a fraction of the sample size; the
    intercept is never penalized, so an arbitrarily large penalty collapses
    predictions toward the base acceptance rate rather than toward 1/2.
    """

    kind: str = "logistic"
    reg_scale: float = 1e-3
    tol: float = 1e-8
    max_iter: int = 100
    hidden: int = 16
    steps: int = 300
    learning_rate: float = 0.05


@dataclass(frozen=True)
class ConstantModel:
    """Fallback when the history cannot identify a curve (empty or one-class)."""

    rate: float
    degenerate: bool = True

    def predict(self, s, vbar, f) -> np.ndarray:
        shape = np.broadcast_shapes(np.shape(s), np.shape(vbar), np.shape(f))
        return np.full(shape, self.rate)


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray  # (6,): intercept + FEATURE_NAMES
    n_iter: int = 0
    converged: bool = True
    degenerate: bool = False

    def predict(self, s, vbar, f) -> np.ndarray:
        p = expit(design_matrix(s, vbar, f) @ self.weights)
        return np.clip(p, _PRED_CLIP, 1.0 - _PRED_CLIP)


@dataclass(frozen=True)
class MLPModel:
    w1: np.ndarray  # (5, hidden)
    b1: np.ndarray
    w2: np.ndarray  # (hidden,)
    b2: float
    degenerate: bool = False

    def predict(self, s, vbar, f) -> np.ndarray:
        x = design_matrix(s, vbar, f)[:, 1:]
        h = np.tanh(x @ self.w1 + self.b1)
        p = expit(h @ self.w2 + self.b2)
        return np.clip(p, _PRED_CLIP, 1.0 - _PRED_CLIP)


def _fit_logistic(x: np.ndarray, y: np.ndarray, spec: LearnerSpec) -> LogisticModel:
    n, d = x.shape
    lam = spec.reg_scale * n
    pen = np.ones(d)
    pen[0] = 0.0  # intercept unpenalized
    beta = np.zeros(d)
    converged = False
    it = 0
    for it in range(1, spec.max_iter + 1):
        p = expit(x @ beta)
        w = p * (1.0 - p)
        grad = x.T @ (p - y) + lam * pen * beta
        hess = (x * w[:, None]).T @ x + lam * np.diag(pen)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.solve(hess + 1e-10 * np.eye(d), grad)
        beta = beta - step
        if np.max(np.abs(step)) < spec.tol:
            converged = True
            break
    return LogisticModel(weights=beta, n_iter=it, converged=converged)


def _fit_mlp(x: np.ndarray, y: np.ndarray, spec: LearnerSpec, seed: Sequence[int] | int) -> MLPModel:
    # Full batch with a fixed step count: deterministic given the seed.
    # The intercept column is dropped; the hidden bias plays that role.
    x = x[:, 1:]
    rng = np.random.default_rng(seed)
    n, d = x.shape
    h = spec.hidden
    w1 = rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, h))
    b1 = np.zeros(h)
    w2 = rng.normal(0.0, 1.0 / np.sqrt(h), size=h)
    b2 = 0.0
    lam = spec.reg_scale
    m = [np.zeros_like(w1), np.zeros_like(b1), np.zeros_like(w2), 0.0]
    v = [np.zeros_like(w1), np.zeros_like(b1), np.zeros_like(w2), 0.0]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    for t in range(1, spec.steps + 1):
        hidden = np.tanh(x @ w1 + b1)
        p = expit(hidden @ w2 + b2)
        err = (p - y) / n
        g_w2 = hidden.T @ err + lam * w2
        g_b2 = float(err.sum())
        back = np.outer(err, w2) * (1.0 - hidden**2)
        g_w1 = x.T @ back + lam * w1
        g_b1 = back.sum(axis=0)
        grads = [g_w1, g_b1, g_w2, g_b2]
        params = [w1, b1, w2, b2]
        for i in range(4):
            m[i] = beta1 * m[i] + (1 - beta1) * grads[i]
            v[i] = beta2 * v[i] + (1 - beta2) * (grads[i] * grads[i] if i < 3 else grads[i] ** 2)
            mh = m[i] / (1 - beta1**t)
            vh = v[i] / (1 - beta2**t)
            params[i] = params[i] - spec.learning_rate * mh / (np.sqrt(vh) + eps)
        w1, b1, w2, b2 = params
    return MLPModel(w1=w1, b1=b1, w2=w2, b2=float(b2))


def fit_acceptance_model(
    history: History,
    spec: LearnerSpec | None = None,
    seed: Sequence[int] | int = 0,
    sample: np.ndarray | None = None,
):
    """Fit one acceptance model on (a resample of) the offer history.

    Only extended offers are informative. A history with a single outcome
    class cannot identify a probability curve; the fit then degrades to a
    clipped constant at the observed base rate, flagged via `.degenerate`.
    """
    spec = spec or LearnerSpec()
    mask = np.asarray(history.offered, dtype=bool)
    idx = np.nonzero(mask)[0]
    if sample is not None:
        idx = idx[sample]
    if idx.size == 0:
        return ConstantModel(rate=0.5)
    y = history.accepted[idx].astype(float)
    rate = float(y.mean())
    if rate == 0.0 or rate == 1.0:
        return ConstantModel(rate=float(np.clip(rate, *_CONSTANT_CLIP)))
    x = design_matrix(history.s[idx], history.vbar[idx], history.f[idx])
    if spec.kind == "logistic":
        return _fit_logistic(x, y, spec)
    if spec.kind == "mlp":
        return _fit_mlp(x, y, spec, seed)
    raise ValueError(f"unknown learner kind: {spec.kind!r}")


@dataclass(frozen=True)
class BootstrapEnsemble:
    """B acceptance models, one per with-replacement resample of the history."""

    models: tuple
    degenerate: bool = False  # True when no resample could identify a curve

    @property
    def B(self) -> int:
        return len(self.models)

    def predict_matrix(self, s, vbar, f) -> np.ndarray:
        """Per-model acceptance probabilities, shape (B, S)."""
        logistic = [m for m in self.models if isinstance(m, LogisticModel)]
        if len(logistic) == self.B:
            x = design_matrix(s, vbar, f)
            w = np.stack([m.weights for m in self.models])
            return np.clip(expit(x @ w.T).T, _PRED_CLIP, 1.0 - _PRED_CLIP)
        return np.stack([m.predict(s, vbar, f) for m in self.models])

    def predict_mean(self, s, vbar, f) -> np.ndarray:
        return self.predict_matrix(s, vbar, f).mean(axis=0)


def bootstrap_ensemble(
    history: History, B: int, spec: LearnerSpec | None = None, seed: Sequence[int] | int = 0
) -> BootstrapEnsemble:
    """Fit the B-member ensemble. Resample b is seeded by (seed, b).

    An empty history yields an ensemble of constant-0.5 models (the cold
    start): all draws coincide, downstream ranking sees zero variance and
    degrades to the plug-in ordering.
    """
    spec = spec or LearnerSpec()
    base = list(seed) if isinstance(seed, (list, tuple)) else [seed]
    n = int(np.count_nonzero(history.offered)) if len(history) else 0
    if n == 0:
        return BootstrapEnsemble(models=tuple(ConstantModel(rate=0.5) for _ in range(B)), degenerate=True)
    models = []
    for b in range(B):
        rng = np.random.default_rng([*base, b])
        sample = rng.integers(0, n, size=n)
        models.append(fit_acceptance_model(history, spec, seed=[*base, b], sample=sample))
    degenerate = all(getattr(m, "degenerate", False) for m in models)
    return BootstrapEnsemble(models=tuple(models), degenerate=degenerate)


def predict_expected_utilities(
    ensemble: BootstrapEnsemble, utilities: np.ndarray, s, vbar, f
) -> tuple[np.ndarray, np.ndarray]:
    """Expected-utility draws U * pi^(b) and their ensemble mean U * pi-hat.

    Returns (draws, point) with draws of shape (B, S). The point estimate is
    exactly the mean of the draws, which is the identity downstream ranking
    relies on.
    """
    pi = ensemble.predict_matrix(s, vbar, f)
    draws = np.asarray(utilities, dtype=float)[None, :] * pi
    return draws, draws.mean(axis=0)
