"""Student-MLP training against teacher outputs under several distillation objectives.

Every objective is a KL divergence KL(target || student) averaged over the
visible rows, optionally mixed with cross-entropy on labeled rows:

* GLNN          target = P^t, student = softmax(logits)
* PND / PND_FIX target = propagated P^t (see ``make_target``)
* INVKD         target = normalize(P^t), student = normalize((2I - γÃ) softmax(logits))
* CONV_ABLATION target = P^t, student = normalize(Ã softmax(logits))
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import ConfigError, InputError
from .graph import NormalizedAdjacency, apply_operator, dirichlet_energy
from .nn import (AdamState, EarlyStopping, MlpModel, accuracy, adam_step, as_input,
                 backprop, ce_loss, kl_loss, make_rng, mlp_forward, softmax)
from .propagation import (PropagationConfig, _index_set, normalize_rows, propagate_pnd,
                          propagate_pnd_fix)


class Kind(str, Enum):
    GLNN = "glnn"
    INVKD = "invkd"
    PND = "pnd"
    PND_FIX = "pnd_fix"
    CONV_ABLATION = "conv_ablation"


@dataclass(frozen=True)
class DistillVariant:
    kind: Kind
    gamma: float | None = None
    iterations: int | None = None
    alpha: float = 0.0
    floor: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.kind is not Kind.GLNN and self.kind is not Kind.CONV_ABLATION and self.gamma is None:
            raise ConfigError(f"{self.kind.value} needs gamma")
        if self.kind in (Kind.PND, Kind.PND_FIX) and self.iterations is None:
            raise ConfigError(f"{self.kind.value} needs iterations")
        if self.gamma is not None and not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma}")

    @property
    def propagation(self) -> PropagationConfig:
        return PropagationConfig(self.gamma, self.iterations, self.floor)

    @property
    def label(self) -> str:
        parts = [self.kind.value]
        if self.gamma is not None:
            parts.append(f"g{self.gamma:g}")
        if self.iterations is not None:
            parts.append(f"T{self.iterations}")
        if self.alpha:
            parts.append(f"a{self.alpha:g}")
        return "_".join(parts)


@dataclass
class StudentConfig:
    hidden: tuple = (128,)
    lr: float = 0.01
    weight_decay: float = 0.0005
    dropout: float = 0.3
    patience: int = 50
    max_epochs: int = 500
    batch_size: int | None = None    # None = full batch
    track_energy: bool = True

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in np.atleast_1d(self.hidden))
        if self.patience < 1:
            raise ConfigError("patience must be at least 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be positive")


# Validation-selected ranges searched by ``grid_search``.
SEARCH_SPACE = {
    "lr": (0.01, 0.005, 0.001),
    "weight_decay": (0.005, 0.001, 0.0),
    "dropout": (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8),
}


def make_target(variant: DistillVariant, p_teacher, a_norm: NormalizedAdjacency, train_idx) -> np.ndarray:
    """Target distribution the student is matched against."""
    p_teacher = np.asarray(p_teacher, dtype=np.float64)
    if variant.kind is Kind.PND:
        return normalize_rows(propagate_pnd(p_teacher, a_norm, variant.propagation), variant.floor)
    if variant.kind is Kind.PND_FIX:
        pinned = _index_set(train_idx, a_norm.num_nodes)
        out = normalize_rows(propagate_pnd_fix(p_teacher, a_norm, variant.propagation, pinned),
                             variant.floor)
        out[pinned] = p_teacher[pinned]
        return out
    return p_teacher


def _operator_kl(student_probs, target, rows, op, floor):
    """KL(target || normalize(op(S))) over rows and its gradient wrt S.

    Entries of op(S) below ``floor`` are clamped and pass no gradient.
    """
    M = op(student_probs)
    keep = M > floor
    Q = np.where(keep, M, floor)
    s = Q.sum(axis=1, keepdims=True)
    R = Q / s
    t, r = target[rows], R[rows]
    pos = t > 0
    loss = np.sum(t[pos] * (np.log(t[pos]) - np.log(r[pos]))) / len(rows)
    dR = np.zeros_like(M)
    dR[rows] = -np.divide(t, r, out=np.zeros_like(t), where=pos) / len(rows)
    dQ = (dR - np.sum(dR * R, axis=1, keepdims=True)) / s
    return float(loss), dQ * keep


def _softmax_backward(S, dS):
    return S * (dS - np.sum(dS * S, axis=1, keepdims=True))


def distill_loss(variant: DistillVariant, logits, target, p_teacher, a_norm: NormalizedAdjacency,
                 rows, labels=None, train_idx=None):
    """(loss, grad wrt logits).  ``rows`` are the visible nodes; CE uses rows ∩ train_idx."""
    logits = np.asarray(logits, dtype=np.float64)
    rows = np.asarray(rows, dtype=np.int64).ravel()
    if rows.size == 0:
        raise InputError("distillation loss needs a non-empty row set")
    if rows.min() < 0 or rows.max() >= logits.shape[0]:
        raise InputError("row index out of range")
    kind = variant.kind
    if kind in (Kind.INVKD, Kind.CONV_ABLATION):
        if a_norm.num_nodes != logits.shape[0]:
            raise InputError("operator size does not match the number of logits")
        S = softmax(logits)
        if kind is Kind.INVKD:
            gamma = variant.gamma
            op = lambda V: 2.0 * V - gamma * apply_operator(a_norm, V)
            op_t = op     # symmetric
            tgt = normalize_rows(p_teacher, variant.floor)
        else:
            op = op_t = lambda V: apply_operator(a_norm, V)
            tgt = np.asarray(p_teacher, dtype=np.float64)
        kl, dM = _operator_kl(S, tgt, rows, op, variant.floor)
        kl_grad = _softmax_backward(S, op_t(dM))
    else:
        kl, kl_grad = kl_loss(logits, target, rows)
    if variant.alpha == 0.0:
        return kl, kl_grad
    if labels is None or train_idx is None:
        raise ConfigError("alpha > 0 needs labels and training indices")
    labeled = np.intersect1d(rows, train_idx)
    if labeled.size == 0:
        raise InputError("no labeled rows among the visible rows")
    ce, ce_grad = ce_loss(logits, labels, labeled)
    a = variant.alpha
    if a == 1.0:
        return ce, ce_grad
    return a * ce + (1 - a) * kl, a * ce_grad + (1 - a) * kl_grad


def evaluate(model: MlpModel, X, labels, idx) -> float:
    logits, _ = mlp_forward(model, as_input(X))
    return accuracy(logits, labels, idx)


@dataclass
class StudentResult:
    model: MlpModel
    metrics: dict
    history: list = field(default_factory=list)


def train_student(X, labels, split, p_teacher, a_norm: NormalizedAdjacency,
                  variant: DistillVariant, cfg: StudentConfig | None = None, seed=0,
                  target=None) -> StudentResult:
    """Train a student MLP with early stopping on validation accuracy.

    ``a_norm`` must describe the graph visible at training time (inductive
    edges removed); the KL term runs over ``split.observed`` rows.  Energy
    in the per-epoch records is the Dirichlet energy of the student's
    softmax output on ``a_norm``.
    """
    cfg = cfg or StudentConfig()
    if p_teacher is None:
        raise ConfigError("student training needs teacher probabilities")
    labels = np.asarray(labels, dtype=np.int64)
    X = as_input(X)
    p_teacher = np.asarray(p_teacher, dtype=np.float64)
    if p_teacher.shape[0] != X.shape[0]:
        raise InputError("teacher output rows do not match the feature rows")
    if target is None:
        target = make_target(variant, p_teacher, a_norm, split.train)
    rows = split.observed
    if variant.kind in (Kind.INVKD, Kind.CONV_ABLATION) and cfg.batch_size is not None:
        raise ConfigError(f"{variant.kind.value} couples neighboring rows; use full-batch training")
    rng = make_rng(seed)
    model = MlpModel.init([X.shape[1], *cfg.hidden, p_teacher.shape[1]], rng, cfg.dropout)
    opt = AdamState(lr=cfg.lr, weight_decay=cfg.weight_decay)
    stopper = EarlyStopping(cfg.patience)
    val_idx = split.val if len(split.val) else split.train
    best = model.copy()
    history = []
    init_energy = None
    if cfg.track_energy:
        init_energy = dirichlet_energy(softmax(mlp_forward(model, X)[0]), a_norm)
    for epoch in range(cfg.max_epochs):
        if cfg.batch_size is None:
            batches = [rows]
        else:
            order = rng.permutation(rows)
            batches = [np.sort(order[i:i + cfg.batch_size])
                       for i in range(0, len(order), cfg.batch_size)]
        total = 0.0
        for batch in batches:
            logits, cache = mlp_forward(model, X, train_mode=True, rng=rng)
            loss, grad = distill_loss(variant, logits, target, p_teacher, a_norm, batch,
                                      labels, split.train)
            adam_step(model.params(), backprop(model, cache, grad), opt)
            total += loss * len(batch)
        logits, _ = mlp_forward(model, X)
        val_acc = accuracy(logits, labels, val_idx)
        rec = {"epoch": epoch, "loss": total / len(rows), "val_acc": val_acc}
        if cfg.track_energy:
            rec["energy"] = dirichlet_energy(softmax(logits), a_norm)
        history.append(rec)
        if stopper.update(epoch, val_acc):
            best = model.copy()
        if stopper.should_stop:
            break
    logits, _ = mlp_forward(best, X)
    metrics = {"best_epoch": stopper.best_epoch, "val_acc": accuracy(logits, labels, val_idx)}
    if cfg.track_energy:
        metrics["init_energy"] = init_energy
        metrics["final_energy"] = history[-1]["energy"] if history else init_energy
    if len(split.test_obs):
        metrics["test_obs_acc"] = accuracy(logits, labels, split.test_obs)
    if len(split.test_ind):
        metrics["test_ind_acc"] = accuracy(logits, labels, split.test_ind)
    return StudentResult(best, metrics, history)


def grid_search(X, labels, split, p_teacher, a_norm, variant, base: StudentConfig | None = None,
                space=None, budget=None, seed=0):
    """Exhaustive search over ``space`` (default ``SEARCH_SPACE``), selecting by validation
    accuracy; ties keep the first configuration visited.  ``budget`` caps the number of
    configurations tried, taken in a seeded random order.

    Returns (best_cfg, best_result, trials) where trials lists (params, val_acc).
    """
    base = base or StudentConfig()
    space = SEARCH_SPACE if space is None else space
    keys = sorted(space)
    combos = list(itertools.product(*(space[k] for k in keys)))
    if budget is not None and budget < len(combos):
        pick = make_rng(seed).choice(len(combos), size=budget, replace=False)
        combos = [combos[i] for i in sorted(pick)]
    target = make_target(variant, p_teacher, a_norm, split.train)
    best = None
    trials = []
    for combo in combos:
        params = dict(zip(keys, combo))
        cfg = replace(base, **params)
        res = train_student(X, labels, split, p_teacher, a_norm, variant, cfg, seed, target)
        trials.append((params, res.metrics["val_acc"]))
        if best is None or res.metrics["val_acc"] > best[1].metrics["val_acc"]:
            best = (cfg, res)
    return best[0], best[1], trials
