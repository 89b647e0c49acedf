"""Dense MLPs with hand-written backprop, losses, and Adam.

Inputs to the first layer may be a scipy sparse matrix (bag-of-words features);
everything downstream is dense float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InputError


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator (Philox); same seed, same stream."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn_rngs(seed, n: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.Philox(s))
            for s in np.random.SeedSequence(seed).spawn(n)]


def glorot(rng, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass
class MlpModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    dropout: float = 0.0

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise InputError("need one bias per weight matrix and at least one layer")
        for w, b in zip(self.weights, self.biases):
            if b.shape != (w.shape[1],):
                raise InputError("bias shape does not match layer output")
        for w, w_next in zip(self.weights, self.weights[1:]):
            if w.shape[1] != w_next.shape[0]:
                raise InputError("consecutive layer dimensions do not chain")
        if not 0.0 <= self.dropout < 1.0:
            raise InputError("dropout must lie in [0, 1)")

    @classmethod
    def init(cls, dims, rng, dropout=0.0) -> "MlpModel":
        """Glorot-uniform weights, zero biases; ``dims`` is [in, hidden..., out]."""
        weights = [glorot(rng, a, b) for a, b in zip(dims[:-1], dims[1:])]
        biases = [np.zeros(b) for b in dims[1:]]
        return cls(weights, biases, dropout)

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def copy(self) -> "MlpModel":
        return MlpModel([w.copy() for w in self.weights],
                        [b.copy() for b in self.biases], self.dropout)


@dataclass
class ForwardCache:
    inputs: list        # input to each layer (first may be sparse)
    relu_masks: list    # boolean mask of positive pre-activations per hidden layer
    drop_masks: list    # scaled dropout masks per hidden layer, or None


def dropout_mask(rng, shape, rate):
    if rate <= 0.0:
        return None
    return (rng.random(shape) >= rate) / (1.0 - rate)


def mlp_forward(model: MlpModel, X, train_mode: bool = False, rng=None):
    """Return (logits, cache).  Dropout acts on hidden activations in train mode only."""
    if X.shape[1] != model.dims[0]:
        raise InputError(f"input has {X.shape[1]} columns, model expects {model.dims[0]}")
    use_dropout = train_mode and model.dropout > 0.0
    if use_dropout and rng is None:
        raise InputError("train-mode dropout needs an rng")
    inputs, relu_masks, drop_masks = [], [], []
    h = X
    last = len(model.weights) - 1
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        inputs.append(h)
        z = np.asarray(h @ w) + b
        if k == last:
            return z, ForwardCache(inputs, relu_masks, drop_masks)
        mask = z > 0
        h = z * mask
        relu_masks.append(mask)
        m = dropout_mask(rng, h.shape, model.dropout) if use_dropout else None
        if m is not None:
            h = h * m
        drop_masks.append(m)


def backprop(model: MlpModel, cache: ForwardCache, grad_logits) -> list[np.ndarray]:
    """Gradients in ``model.params()`` order: [dW0, db0, dW1, db1, ...]."""
    g = np.asarray(grad_logits, dtype=np.float64)
    if len(cache.inputs) != len(model.weights) or g.shape[1] != model.dims[-1] \
            or g.shape[0] != cache.inputs[0].shape[0]:
        raise InputError("cache does not match this model / gradient shape")
    grads = []
    for k in range(len(model.weights) - 1, -1, -1):
        h = cache.inputs[k]
        dw = np.asarray(h.T @ g)
        db = g.sum(axis=0)
        grads.append(db)
        grads.append(dw)
        if k == 0:
            break
        g = g @ model.weights[k].T
        m = cache.drop_masks[k - 1]
        if m is not None:
            g = g * m
        g = g * cache.relu_masks[k - 1]
    grads.reverse()
    return grads


def log_softmax(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    s = z - z.max(axis=1, keepdims=True)
    return s - np.log(np.exp(s).sum(axis=1, keepdims=True))


def softmax(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _rows(rows, n) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.int64).ravel()
    if rows.size == 0:
        raise InputError("loss needs a non-empty row set")
    if rows.min() < 0 or rows.max() >= n:
        raise InputError("row index out of range")
    return rows


def kl_loss(logits, target, rows):
    """Mean over ``rows`` of KL(target || softmax(logits)); gradient wrt logits."""
    logits = np.asarray(logits, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if logits.shape != target.shape:
        raise InputError("logits and target shapes differ")
    rows = _rows(rows, logits.shape[0])
    z, t = logits[rows], target[rows]
    logp = log_softmax(z)
    pos = t > 0
    loss = np.sum(t[pos] * (np.log(t[pos]) - logp[pos])) / len(rows)
    grad = np.zeros_like(logits)
    np.add.at(grad, rows, (np.exp(logp) - t) / len(rows))
    return float(loss), grad


def ce_loss(logits, labels, rows):
    """Mean cross-entropy over ``rows``; gradient wrt logits."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    rows = _rows(rows, logits.shape[0])
    logp = log_softmax(logits[rows])
    y = labels[rows]
    loss = -np.mean(logp[np.arange(len(rows)), y])
    d = np.exp(logp)
    d[np.arange(len(rows)), y] -= 1.0
    grad = np.zeros_like(logits)
    np.add.at(grad, rows, d / len(rows))
    return float(loss), grad


@dataclass
class AdamState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step_count: int = 0
    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)


def adam_step(params, grads, state: AdamState):
    """In-place bias-corrected Adam update; weight decay is added to the gradient (L2 form)."""
    if not state.first_moment:
        state.first_moment = [np.zeros_like(p) for p in params]
        state.second_moment = [np.zeros_like(p) for p in params]
    state.step_count += 1
    bc1 = 1.0 - state.beta1 ** state.step_count
    bc2 = 1.0 - state.beta2 ** state.step_count
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if state.weight_decay:
            g = g + state.weight_decay * p
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state


def relative_error(a, b, floor=1e-5):
    return abs(a - b) / max(abs(a), abs(b), floor)


def grad_check(model: MlpModel, X, loss_fn, num_params: int = 200, step: float = 1e-6,
               rng=None) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_fn(logits) -> (loss, grad_logits)``.  Runs with dropout off.  A sampled
    parameter whose perturbation flips any ReLU is skipped (kink avoidance).
    """
    rng = make_rng(0) if rng is None else rng
    logits, cache = mlp_forward(model, X)
    _, g = loss_fn(logits)
    analytic = backprop(model, cache, g)
    params = model.params()
    sizes = np.array([p.size for p in params])
    picks = rng.choice(sizes.sum(), size=min(num_params, sizes.sum()), replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    def evaluate():
        z, c = mlp_forward(model, X)
        return loss_fn(z)[0], c.relu_masks

    worst = 0.0
    for flat in np.sort(picks):
        k = np.searchsorted(offsets, flat, side="right") - 1
        p = params[k].reshape(-1)
        j = flat - offsets[k]
        orig = p[j]
        p[j] = orig + step
        lp, mp = evaluate()
        p[j] = orig - step
        lm, mm = evaluate()
        p[j] = orig
        if any((a != b).any() for a, b in zip(mp, cache.relu_masks)) or \
                any((a != b).any() for a, b in zip(mm, cache.relu_masks)):
            continue
        numeric = (lp - lm) / (2 * step)
        worst = max(worst, relative_error(analytic[k].reshape(-1)[j], numeric))
    return worst


def as_input(X):
    """Dense array, or CSR when the matrix is mostly zeros (bag-of-words features)."""
    if sp.issparse(X):
        return X.tocsr()
    X = np.asarray(X, dtype=np.float64)
    if X.size and np.count_nonzero(X) < 0.1 * X.size:
        return sp.csr_matrix(X)
    return X


def accuracy(logits, labels, idx) -> float:
    """Argmax accuracy over ``idx``; ties go to the lowest class id."""
    idx = np.asarray(idx, dtype=np.int64).ravel()
    if idx.size == 0:
        raise InputError("accuracy needs a non-empty index set")
    pred = np.argmax(np.asarray(logits)[idx], axis=1)
    return float(np.mean(pred == np.asarray(labels)[idx]))


class EarlyStopping:
    """Track the best validation score; ties keep the earliest epoch."""

    def __init__(self, patience: int):
        if patience < 1:
            raise InputError("patience must be at least 1")
        self.patience = patience
        self.best = -np.inf
        self.best_epoch = -1
        self.bad = 0

    def update(self, epoch: int, score: float) -> bool:
        """Record a score; returns True if it is a new best."""
        if score > self.best:
            self.best, self.best_epoch, self.bad = score, epoch, 0
            return True
        self.bad += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.bad >= self.patience
