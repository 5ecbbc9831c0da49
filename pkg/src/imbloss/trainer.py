"""Linear and small MLP score models plus a deterministic SGD trainer.

The optimizer is mini-batch SGD with Nesterov momentum in the lookahead
form

    v <- mu * v - lr * grad L(w + mu * v);   w <- w + v,

decoupled L2 weight decay applied to weight matrices only (never to
biases), and an optional per-class L2 norm cap on linear weight rows
enforced by projection after every step. Given a seed, a training run is
bitwise deterministic.

Prediction always uses the raw scores h(x, .): the prior-based logit
adjustments of the adjusted losses live inside the loss and are never
applied at prediction time.

``best_in_class_search`` looks for the best norm-bounded linear scorer
under either a smooth surrogate objective (multi-restart projected
gradient) or the prior-weighted zero-one objective (seeded random search
with hill climbing). It is a numerical search, not a certificate, but
with enough restarts it resolves low-dimensional geometry questions such
as where a bounded family places its decision boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .datagen import Dataset, DiscreteJoint
from .losses import LossSpec, PriorStats, batch_loss_and_grad
from .numerics import argmax_highest


@dataclass
class TrainConfig:
    """Optimization settings; epochs and batch_size must be >= 1."""

    epochs: int = 200
    batch_size: int = 64
    lr0: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 0.0
    seed: int = 0
    schedule: str = "cosine"  # cosine | constant

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.lr0 < 0:
            raise ValueError("lr0 must be >= 0")
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError("momentum must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.schedule not in ("cosine", "constant"):
            raise ValueError(f"unknown schedule {self.schedule!r}")


# Mirrors the large-batch recipe commonly used for ResNet-scale runs.
PAPER_PRESET = TrainConfig(epochs=200, batch_size=1024, lr0=0.2,
                           momentum=0.9, weight_decay=1e-3)
# Default for the synthetic desk-scale experiments in this package.
DESK_PRESET = TrainConfig(epochs=200, batch_size=64, lr0=0.1,
                          momentum=0.9, weight_decay=0.0)


def cosine_lr(step: int, total_steps: int, lr0: float) -> float:
    """Half-cosine decay lr0 * 0.5 * (1 + cos(pi * step / total_steps))."""
    if total_steps < 1 or not (0 <= step <= total_steps):
        raise ValueError("need 0 <= step <= total_steps, total_steps >= 1")
    return lr0 * 0.5 * (1.0 + np.cos(np.pi * step / total_steps))


class LinearModel:
    """Per-class linear scorer h(x, y) = w_y . x + b_y.

    ``norm_bound`` caps ||w_y||_2 for every class; the cap is enforced by
    projection, so after any update every row satisfies the bound. With
    ``use_bias=False`` the biases stay exactly zero.
    """

    kind = "linear"

    def __init__(self, weights, biases, norm_bound=None, use_bias=True):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.biases = np.asarray(biases, dtype=np.float64)
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise ValueError("weights must be (n, d) and biases (n,)")
        self.norm_bound = None if norm_bound is None else float(norm_bound)
        self.use_bias = bool(use_bias)
        if self.norm_bound is not None and self.norm_bound <= 0:
            raise ValueError("norm_bound must be positive")
        self.project()

    @classmethod
    def init_random(cls, n, d, seed, norm_bound=None, use_bias=True):
        """Seeded uniform(-1/sqrt(d), 1/sqrt(d)) weights, zero biases."""
        rng = np.random.default_rng(seed)
        limit = 1.0 / np.sqrt(d)
        weights = rng.uniform(-limit, limit, size=(n, d))
        return cls(weights, np.zeros(n), norm_bound, use_bias)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "LinearModel":
        return LinearModel(self.weights.copy(), self.biases.copy(),
                           self.norm_bound, self.use_bias)

    def scores(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        out = X @ self.weights.T + self.biases
        return out[0] if single else out

    def project(self) -> None:
        if self.norm_bound is None:
            return
        norms = np.linalg.norm(self.weights, axis=1)
        over = norms > self.norm_bound
        if np.any(over):
            self.weights[over] *= (self.norm_bound / norms[over])[:, None]

    def _params(self):
        # (array, is_weight) pairs; biases excluded when use_bias is False.
        out = [(self.weights, True)]
        if self.use_bias:
            out.append((self.biases, False))
        return out

    def _grads(self, X, dscores):
        grads = [dscores.T @ X]
        if self.use_bias:
            grads.append(dscores.sum(axis=0))
        return grads

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "d": self.d,
            "norm_bound": self.norm_bound,
            "use_bias": self.use_bias,
            "weights": self.weights.tolist(),
            "biases": self.biases.tolist(),
        }


class MlpModel:
    """Fully connected rectifier network with n output scores.

    ``widths`` is (d, hidden..., n). A desk-scale stand-in for larger
    architectures; supports the same training loop as LinearModel.
    """

    kind = "mlp"

    def __init__(self, weights, biases):
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need matching weight/bias lists")
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ValueError("layer weights must be (out, in), biases (out,)")
        self.norm_bound = None
        self.use_bias = True

    @classmethod
    def init_random(cls, widths, seed):
        if len(widths) < 2:
            raise ValueError("widths needs at least input and output sizes")
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            limit = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases)

    @property
    def n(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def d(self) -> int:
        return self.weights[0].shape[1]

    def copy(self) -> "MlpModel":
        return MlpModel([w.copy() for w in self.weights],
                        [b.copy() for b in self.biases])

    def _forward(self, X):
        acts = [np.asarray(X, dtype=np.float64)]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w.T + b
            acts.append(z if i == len(self.weights) - 1 else np.maximum(z, 0.0))
        return acts

    def scores(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        out = self._forward(X[None, :] if single else X)[-1]
        return out[0] if single else out

    def project(self) -> None:
        pass

    def _params(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append((w, True))
            out.append((b, False))
        return out

    def _grads(self, X, dscores):
        acts = self._forward(X)
        grads = []
        delta = dscores
        for i in reversed(range(len(self.weights))):
            grads.append(delta.sum(axis=0))      # bias
            grads.append(delta.T @ acts[i])      # weight
            if i > 0:
                delta = (delta @ self.weights[i]) * (acts[i] > 0)
        return grads[::-1]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "widths": [self.d] + [w.shape[0] for w in self.weights],
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }


def save_checkpoint(model, path) -> None:
    """JSON checkpoint with shapes and row-major float64 arrays."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(model.to_dict(), fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path):
    with open(path, "r", encoding="ascii") as fh:
        blob = json.load(fh)
    if blob["kind"] == "linear":
        return LinearModel(blob["weights"], blob["biases"],
                           blob["norm_bound"], blob["use_bias"])
    if blob["kind"] == "mlp":
        return MlpModel(blob["weights"], blob["biases"])
    raise ValueError(f"unknown checkpoint kind {blob['kind']!r}")


def predict(model, x) -> int:
    """1-based predicted class; ties go to the highest class index."""
    return argmax_highest(model.scores(np.asarray(x, dtype=np.float64))) + 1


def predict_batch(model, X) -> np.ndarray:
    scores = model.scores(np.asarray(X, dtype=np.float64))
    n = scores.shape[1]
    # argmax with ties to the highest index, vectorized via reversal.
    return n - np.argmax(scores[:, ::-1], axis=1).astype(np.int64)


class TrainingDiverged(RuntimeError):
    """Raised when a batch produces a non-finite training loss."""


def train(model, data: Dataset, spec: LossSpec, cfg: TrainConfig):
    """Mini-batch SGD with Nesterov momentum; returns (model, history).

    ``history`` is the per-epoch mean training loss (averaged over the
    examples visited in the epoch, evaluated at the lookahead point where
    gradients are computed). The input model is not mutated.
    """
    if data.d != model.d:
        raise ValueError(f"model expects d={model.d}, data has d={data.d}")
    if data.n != model.n:
        raise ValueError(f"model expects n={model.n}, data has n={data.n}")
    model = model.copy()
    stats = data.stats()
    rng = np.random.default_rng(cfg.seed)
    params = model._params()
    velocity = [np.zeros_like(p) for p, _ in params]

    m = data.m
    batches_per_epoch = (m + cfg.batch_size - 1) // cfg.batch_size
    total_steps = cfg.epochs * batches_per_epoch
    history = []
    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(m)
        loss_sum = 0.0
        for b in range(batches_per_epoch):
            batch = order[b * cfg.batch_size:(b + 1) * cfg.batch_size]
            X = data.features[batch]
            y = data.labels[batch]
            lr = (cosine_lr(step, total_steps, cfg.lr0)
                  if cfg.schedule == "cosine" else cfg.lr0)

            # Lookahead: evaluate the gradient at w + mu * v.
            for (p, _), v in zip(params, velocity):
                p += cfg.momentum * v
            scores = model.scores(X)
            if not np.all(np.isfinite(scores)):
                raise TrainingDiverged(
                    f"non-finite scores at epoch {epoch}, step {step} "
                    f"(family={spec.family}, lr={lr:.6g})"
                )
            values, dscores = batch_loss_and_grad(spec, scores, y, stats,
                                                  rng=rng)
            if not np.all(np.isfinite(values)):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, step {step} "
                    f"(family={spec.family}, lr={lr:.6g})"
                )
            loss_sum += float(values.sum())
            grads = model._grads(X, dscores / len(batch))
            for (p, is_weight), v, g in zip(params, velocity, grads):
                v_new = cfg.momentum * v - lr * g
                p += v_new - cfg.momentum * v
                v[...] = v_new
                if is_weight and cfg.weight_decay > 0.0:
                    p *= 1.0 - lr * cfg.weight_decay
            model.project()
            step += 1
        history.append(loss_sum / m)
    return model, history


# ---------------------------------------------------------------------------
# Best-in-class search over norm-bounded linear scorers.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundedLinearFamily:
    """Linear scorers h(x, y) = w_y . x with ||w_y||_2 <= norm_bound.

    No bias term: decision boundaries pass through the origin. The cap is
    a closed ball rather than a sphere, which searches the same losses:
    these objectives depend only on weight-row differences, and any
    difference feasible in the ball is realizable with every row at
    exactly the bound (put the slack in a common orthogonal component).
    """

    n: int
    d: int
    norm_bound: float

    def random_model(self, rng) -> LinearModel:
        raw = rng.standard_normal((self.n, self.d))
        raw *= self.norm_bound / np.linalg.norm(raw, axis=1, keepdims=True)
        return LinearModel(raw, np.zeros(self.n),
                           norm_bound=self.norm_bound, use_bias=False)


def _as_eval_problem(data):
    """Normalize Dataset / DiscreteJoint into (X, labels, weights, stats).

    For a Dataset the weights are uniform 1/m. For a DiscreteJoint the
    grid points become one-hot feature vectors and each (x, y) cell
    contributes its joint probability, so objectives are exact
    expectations under the joint.
    """
    if isinstance(data, Dataset):
        m = data.m
        return data.features, data.labels, np.full(m, 1.0 / m), data.stats()
    if isinstance(data, DiscreteJoint):
        num_x, n = data.num_x, data.n
        X = np.repeat(np.eye(num_x), n, axis=0)
        labels = np.tile(np.arange(1, n + 1), num_x)
        weights = data.joint.reshape(-1)
        return X, labels, weights, PriorStats(data.p_y)
    raise TypeError(f"unsupported data type {type(data)!r}")


def _weighted_loss_and_grad(spec, model, X, labels, weights, stats):
    scores = model.scores(X)
    values, dscores = batch_loss_and_grad(spec, scores, labels, stats)
    value = float(weights @ values)
    grad_w = (dscores * weights[:, None]).T @ X
    return value, grad_w


def _weighted_balanced_error(model, X, labels, weights, inv_priors):
    preds = predict_batch(model, X)
    wrong = (preds != labels).astype(np.float64)
    return float(np.sum(weights * wrong * inv_priors[labels - 1]))


def best_in_class_search(
    family: BoundedLinearFamily,
    data,
    objective,
    restarts: int = 20,
    seed: int = 0,
    smooth_iters: int = 400,
    search_iters: int = 400,
):
    """Search the bounded linear family for the best model under objective.

    ``objective`` is a LossSpec (smooth: multi-restart projected gradient
    with backtracking) or the string "balanced" (prior-weighted zero-one
    objective: seeded random restarts plus hill climbing on the weight
    rows). Not a global guarantee; with enough restarts it is reliable
    for the low-dimensional geometry probed by the test suite.

    Returns (best_model, best_objective_value).
    """
    X, labels, weights, stats = _as_eval_problem(data)
    rng = np.random.default_rng(seed)
    best_model, best_value = None, np.inf

    if isinstance(objective, LossSpec):
        for _ in range(restarts):
            model = family.random_model(rng)
            value, grad = _weighted_loss_and_grad(
                objective, model, X, labels, weights, stats)
            lr = 1.0
            for _ in range(smooth_iters):
                gnorm = np.linalg.norm(grad)
                if gnorm < 1e-14 or lr < 1e-14:
                    break
                trial = model.copy()
                trial.weights -= lr * grad
                trial.project()
                new_value, new_grad = _weighted_loss_and_grad(
                    objective, trial, X, labels, weights, stats)
                if new_value < value:
                    model, value, grad = trial, new_value, new_grad
                    lr *= 1.5
                else:
                    lr *= 0.5
            if value < best_value:
                best_model, best_value = model, value
        return best_model, best_value

    if objective == "balanced":
        inv_priors = stats.inv_priors
        for _ in range(restarts):
            model = family.random_model(rng)
            value = _weighted_balanced_error(model, X, labels, weights,
                                             inv_priors)
            sigma = 0.5 * family.norm_bound
            for _ in range(search_iters):
                trial = model.copy()
                trial.weights = trial.weights + sigma * rng.standard_normal(
                    trial.weights.shape)
                norms = np.linalg.norm(trial.weights, axis=1, keepdims=True)
                trial.weights *= family.norm_bound / norms
                new_value = _weighted_balanced_error(
                    trial, X, labels, weights, inv_priors)
                if new_value <= value:
                    model, value = trial, new_value
                sigma = max(sigma * 0.99, 1e-3 * family.norm_bound)
            if value < best_value:
                best_model, best_value = model, value
        return best_model, best_value

    raise ValueError(f"unknown objective {objective!r}")


def boundary_angle_degrees(model: LinearModel) -> float:
    """Angle in [0, 90] between a 2-class 2-d boundary and the x1-axis.

    The decision boundary of a no-bias two-class linear scorer is the
    line (w_1 - w_2) . x = 0; the angle is measured against x2 = 0.
    """
    if model.n != 2 or model.d != 2:
        raise ValueError("needs a 2-class, 2-d linear model")
    delta = model.weights[0] - model.weights[1]
    return float(np.degrees(np.arctan2(abs(delta[0]), abs(delta[1]))))
