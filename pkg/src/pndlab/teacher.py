"""Two-layer GraphSAGE teacher (mean aggregator), trained full-batch with hand-written gradients."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import InputError, LoadError
from .graph import SparseGraph
from .nn import (AdamState, EarlyStopping, accuracy, adam_step, as_input, ce_loss,
                 dropout_mask, glorot, make_rng, softmax)

CHECKPOINT_MAGIC = b"PNDT"
CHECKPOINT_VERSION = 1


@dataclass
class SageLayer:
    w_self: np.ndarray
    w_nbr: np.ndarray
    bias: np.ndarray


@dataclass
class SageModel:
    layers: list[SageLayer]
    dropout: float = 0.0

    @classmethod
    def init(cls, in_dim, num_classes, rng, hidden=128, dropout=0.0) -> "SageModel":
        dims = [in_dim, hidden, num_classes]
        layers = [SageLayer(glorot(rng, a, b), glorot(rng, a, b), np.zeros(b))
                  for a, b in zip(dims[:-1], dims[1:])]
        return cls(layers, dropout)

    @property
    def dims(self) -> list[int]:
        return [self.layers[0].w_self.shape[0]] + [l.w_self.shape[1] for l in self.layers]

    def params(self) -> list[np.ndarray]:
        return [p for l in self.layers for p in (l.w_self, l.w_nbr, l.bias)]

    def named_params(self):
        for i, l in enumerate(self.layers):
            yield f"layer{i}.w_self", l.w_self
            yield f"layer{i}.w_nbr", l.w_nbr
            yield f"layer{i}.bias", l.bias

    def copy(self) -> "SageModel":
        return SageModel([SageLayer(l.w_self.copy(), l.w_nbr.copy(), l.bias.copy())
                          for l in self.layers], self.dropout)


@dataclass
class TeacherConfig:
    lr: float = 0.01
    weight_decay: float = 0.0005
    dropout: float = 0.0
    hidden: int = 128
    max_epochs: int = 500
    patience: int = 50
    fan_out: tuple | None = None    # e.g. (5, 5); None = full-neighborhood mean

    def __post_init__(self):
        if self.patience < 1:
            raise InputError("patience must be at least 1")
        if self.fan_out is not None:
            self.fan_out = tuple(int(k) for k in self.fan_out)


def mean_aggregator(g: SparseGraph) -> sp.csr_matrix:
    """Row-normalized adjacency; isolated nodes get an all-zero row."""
    deg = g.degrees.astype(np.float64)
    w = np.repeat(np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0), g.degrees)
    return sp.csr_matrix((w, g.col_idx, g.row_ptr), shape=(g.num_nodes, g.num_nodes))


def sampled_aggregator(g: SparseGraph, fan_out: int, rng) -> sp.csr_matrix:
    """Mean over ``fan_out`` sampled neighbors; sampling is with replacement only
    when a node has fewer than ``fan_out`` neighbors."""
    rows, cols = [], []
    for i in range(g.num_nodes):
        nb = g.neighbors(i)
        if len(nb) == 0:
            continue
        pick = rng.choice(nb, size=fan_out, replace=len(nb) < fan_out)
        rows.append(np.full(fan_out, i))
        cols.append(pick)
    if not rows:
        return sp.csr_matrix((g.num_nodes, g.num_nodes))
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    m = sp.csr_matrix((np.full(len(rows), 1.0 / fan_out), (rows, cols)),
                      shape=(g.num_nodes, g.num_nodes))
    m.sum_duplicates()
    return m


@dataclass
class _SageCache:
    inputs: list = field(default_factory=list)
    aggregated: list = field(default_factory=list)
    aggregators: list = field(default_factory=list)
    relu_masks: list = field(default_factory=list)
    drop_masks: list = field(default_factory=list)


def sage_forward(model: SageModel, g: SparseGraph, X, train_mode=False, rng=None,
                 fan_out=None, aggregators=None, return_cache=False):
    """h <- act(h W_self + mean_{j in N(i)} h_j W_nbr + b) per layer, ReLU between layers only."""
    if X.shape[0] != g.num_nodes:
        raise InputError("feature rows must match the node count")
    if X.shape[1] != model.dims[0]:
        raise InputError(f"input has {X.shape[1]} columns, model expects {model.dims[0]}")
    if aggregators is None:
        if train_mode and fan_out is not None:
            if rng is None:
                raise InputError("neighbor sampling needs an rng")
            aggregators = [sampled_aggregator(g, k, rng) for k in fan_out]
        else:
            aggregators = [mean_aggregator(g)] * len(model.layers)
    cache = _SageCache(aggregators=aggregators)
    h = as_input(X)
    last = len(model.layers) - 1
    for k, layer in enumerate(model.layers):
        agg = aggregators[k] @ h
        cache.inputs.append(h)
        cache.aggregated.append(agg)
        z = np.asarray(h @ layer.w_self) + np.asarray(agg @ layer.w_nbr) + layer.bias
        if k == last:
            return (z, cache) if return_cache else z
        mask = z > 0
        h = z * mask
        cache.relu_masks.append(mask)
        m = dropout_mask(rng, h.shape, model.dropout) if train_mode and model.dropout > 0 else None
        if m is not None:
            h = h * m
        cache.drop_masks.append(m)


def sage_backprop(model: SageModel, cache: _SageCache, grad_logits) -> list[np.ndarray]:
    """Gradients in ``model.params()`` order."""
    g = grad_logits
    grads = []
    for k in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[k]
        grads.append(g.sum(axis=0))
        grads.append(np.asarray(cache.aggregated[k].T @ g))
        grads.append(np.asarray(cache.inputs[k].T @ g))
        if k == 0:
            break
        g = g @ layer.w_self.T + np.asarray(cache.aggregators[k].T @ (g @ layer.w_nbr.T))
        if cache.drop_masks[k - 1] is not None:
            g = g * cache.drop_masks[k - 1]
        g = g * cache.relu_masks[k - 1]
    grads.reverse()
    return grads


@dataclass
class TeacherResult:
    model: SageModel
    probs: np.ndarray
    logits: np.ndarray
    metrics: dict


def train_teacher(g: SparseGraph, X, labels, split, cfg: TeacherConfig | None = None,
                  seed=0) -> TeacherResult:
    """Cross-entropy on split.train, early stopping on validation accuracy.

    In the inductive setting ``g`` must already have the inductive edges removed.
    The returned model holds the best-validation parameters.
    """
    cfg = cfg or TeacherConfig()
    labels = np.asarray(labels, dtype=np.int64)
    if len(split.train) == 0:
        raise InputError("teacher needs at least one training node")
    rng = make_rng(seed)
    X = as_input(X)
    num_classes = int(labels.max()) + 1
    model = SageModel.init(X.shape[1], num_classes, rng, cfg.hidden, cfg.dropout)
    opt = AdamState(lr=cfg.lr, weight_decay=cfg.weight_decay)
    full = [mean_aggregator(g)] * len(model.layers)
    val_idx = split.val if len(split.val) else split.train
    stopper = EarlyStopping(cfg.patience)
    best = model.copy()
    history = []
    for epoch in range(cfg.max_epochs):
        sampled = None
        if cfg.fan_out is not None:
            sampled = [sampled_aggregator(g, k, rng) for k in cfg.fan_out]
        logits, cache = sage_forward(model, g, X, train_mode=True, rng=rng,
                                     aggregators=sampled or full, return_cache=True)
        loss, grad = ce_loss(logits, labels, split.train)
        adam_step(model.params(), sage_backprop(model, cache, grad), opt)
        eval_logits = sage_forward(model, g, X, aggregators=full)
        val_acc = accuracy(eval_logits, labels, val_idx)
        history.append({"epoch": epoch, "loss": loss, "val_acc": val_acc})
        if stopper.update(epoch, val_acc):
            best = model.copy()
        if stopper.should_stop:
            break
    logits = sage_forward(best, g, X, aggregators=full)
    metrics = {"best_epoch": stopper.best_epoch, "epochs": len(history),
               "train_acc": accuracy(logits, labels, split.train),
               "val_acc": accuracy(logits, labels, val_idx), "history": history}
    if len(split.test_obs):
        metrics["test_obs_acc"] = accuracy(logits, labels, split.test_obs)
    if len(split.test_ind):
        metrics["test_ind_acc"] = accuracy(logits, labels, split.test_ind)
    return TeacherResult(best, softmax(logits), logits, metrics)


# ---------------------------------------------------------------------------
# checkpoint + P^t files
# ---------------------------------------------------------------------------

def save_checkpoint(model: SageModel, path) -> None:
    """magic "PNDT", u32 version, u32 count, then per tensor
    (u32 name length, utf-8 name, u32 ndim, u32 dims...), then all f64 LE blobs."""
    named = list(model.named_params())
    out = bytearray(CHECKPOINT_MAGIC)
    out += struct.pack("<II", CHECKPOINT_VERSION, len(named))
    for name, arr in named:
        b = name.encode()
        out += struct.pack("<I", len(b)) + b
        out += struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    for _, arr in named:
        out += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    Path(path).write_bytes(bytes(out))


def load_checkpoint(path) -> SageModel:
    p = Path(path)
    if not p.is_file():
        raise LoadError(p, "missing file")
    data = p.read_bytes()
    if data[:4] != CHECKPOINT_MAGIC:
        raise LoadError(p, "not a teacher checkpoint (bad magic)")
    try:
        version, count = struct.unpack_from("<II", data, 4)
        if version != CHECKPOINT_VERSION:
            raise LoadError(p, f"unsupported checkpoint version {version}")
        pos = 12
        shapes = []
        for _ in range(count):
            (ln,) = struct.unpack_from("<I", data, pos)
            pos += 4 + ln
            (ndim,) = struct.unpack_from("<I", data, pos)
            shapes.append(struct.unpack_from(f"<{ndim}I", data, pos + 4))
            pos += 4 + 4 * ndim
    except struct.error:
        raise LoadError(p, "truncated checkpoint header") from None
    arrays = []
    for shape in shapes:
        size = int(np.prod(shape))
        if pos + 8 * size > len(data):
            raise LoadError(p, "truncated checkpoint")
        arrays.append(np.frombuffer(data, dtype="<f8", count=size, offset=pos)
                      .reshape(shape).astype(np.float64))
        pos += 8 * size
    if pos != len(data) or count % 3 or count == 0:
        raise LoadError(p, "malformed checkpoint")
    layers = [SageLayer(*arrays[i:i + 3]) for i in range(0, count, 3)]
    for l in layers:
        if l.w_self.ndim != 2 or l.w_nbr.shape != l.w_self.shape \
                or l.bias.shape != (l.w_self.shape[1],):
            raise LoadError(p, "inconsistent tensor shapes in checkpoint")
    for a, b in zip(layers, layers[1:]):
        if a.w_self.shape[1] != b.w_self.shape[0]:
            raise LoadError(p, "layer dimensions do not chain")
    return SageModel(layers)


def write_prob_tsv(P, path) -> None:
    with open(path, "w") as f:
        for row in np.asarray(P, dtype=np.float64):
            f.write("\t".join(repr(float(x)) for x in row) + "\n")


def read_prob_tsv(path) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise LoadError(p, "missing file")
    rows = [ln.split("\t") for ln in p.read_text().splitlines() if ln.strip()]
    try:
        return np.array(rows, dtype=np.float64)
    except ValueError:
        raise LoadError(p, "malformed probability matrix") from None
