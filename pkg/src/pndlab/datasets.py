"""Dataset directories, train/val/test splits, and synthetic generators.

On-disk layout of a dataset directory::

    manifest.json   {"name", "num_nodes", "num_classes", "feature_dim"}
    edges.tsv       "u<TAB>v" per line, 0-based, undirected, duplicates tolerated
    features.tsv    feature_dim tab-separated decimals per node line
    labels.tsv      one 0-based class id per line
    splits.json     optional {"train", "val", "test_obs", "test_ind"}
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ConstructionError, InputError, LoadError, SplitError
from .graph import SparseGraph, build_graph

DATA_ENV = "PND_DATA_DIR"
_REPO_DATA = Path(__file__).resolve().parents[2] / "data"


@dataclass(eq=False)
class Dataset:
    graph: SparseGraph
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    name: str = "dataset"

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.shape[0] != self.graph.num_nodes:
            raise InputError("feature rows must match the node count")
        if self.labels.shape != (self.graph.num_nodes,):
            raise InputError("need one label per node")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise InputError("labels must lie in [0, num_classes)")

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]


@dataclass(eq=False)
class Split:
    train: np.ndarray
    val: np.ndarray
    test_obs: np.ndarray
    test_ind: np.ndarray

    def __post_init__(self):
        for name in ("train", "val", "test_obs", "test_ind"):
            setattr(self, name, np.sort(np.asarray(getattr(self, name), dtype=np.int64).ravel()))

    @property
    def inductive(self) -> bool:
        return self.test_ind.size > 0

    @property
    def observed(self) -> np.ndarray:
        """Nodes visible during training: everything except the inductive subset."""
        return np.sort(np.concatenate([self.train, self.val, self.test_obs]))

    def validate(self, num_nodes: int) -> None:
        parts = [self.train, self.val, self.test_obs, self.test_ind]
        allidx = np.concatenate(parts)
        if len(np.unique(allidx)) != len(allidx):
            raise SplitError("split parts overlap")
        if len(allidx) != num_nodes or (num_nodes and (allidx.min() < 0 or allidx.max() >= num_nodes)):
            raise SplitError("split parts do not cover exactly the node set")

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("train", "val", "test_obs", "test_ind")}

    @classmethod
    def from_dict(cls, d) -> "Split":
        return cls(d["train"], d["val"], d["test_obs"], d.get("test_ind", []))


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def _fmt_row(row: np.ndarray) -> str:
    ints = row.astype(np.int64)
    if np.all(ints == row) and not np.any(np.signbit(row) & (row == 0)):
        return "\t".join(map(str, ints.tolist()))
    return "\t".join(repr(float(x)) for x in row)


def save_dataset(ds: Dataset, directory, split: Split | None = None) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    manifest = {"name": ds.name, "num_nodes": ds.num_nodes,
                "num_classes": int(ds.num_classes), "feature_dim": ds.feature_dim}
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    with open(d / "edges.tsv", "w") as f:
        for u, v in ds.graph.edges():
            f.write(f"{u}\t{v}\n")
    with open(d / "features.tsv", "w") as f:
        for row in ds.features:
            f.write(_fmt_row(row) + "\n")
    with open(d / "labels.tsv", "w") as f:
        f.write("".join(f"{y}\n" for y in ds.labels.tolist()))
    if split is not None:
        (d / "splits.json").write_text(json.dumps(split.to_dict()) + "\n")
    return d


def _lines(path: Path):
    if not path.is_file():
        raise LoadError(path, "missing file")
    with open(path) as f:
        return [ln.rstrip("\n") for ln in f if ln.strip()]


def load_dataset(directory) -> Dataset:
    d = Path(directory)
    if not d.is_dir():
        raise LoadError(d, "dataset directory does not exist")
    mpath = d / "manifest.json"
    if not mpath.is_file():
        raise LoadError(mpath, "missing file")
    try:
        manifest = json.loads(mpath.read_text())
        n = int(manifest["num_nodes"])
        num_classes = int(manifest["num_classes"])
        fdim = int(manifest["feature_dim"])
    except (ValueError, KeyError, TypeError) as exc:
        raise LoadError(mpath, f"bad manifest ({exc})") from None

    lpath = d / "labels.tsv"
    lab = _lines(lpath)
    if len(lab) != n:
        raise LoadError(lpath, f"expected {n} labels, found {len(lab)}")
    labels = np.empty(n, dtype=np.int64)
    for i, s in enumerate(lab):
        try:
            labels[i] = int(s)
        except ValueError:
            raise LoadError(lpath, f"not an integer label: {s!r}", i + 1) from None
        if not 0 <= labels[i] < num_classes:
            raise LoadError(lpath, f"label {labels[i]} outside [0, {num_classes})", i + 1)

    fpath = d / "features.tsv"
    rows = _lines(fpath)
    if len(rows) != n:
        raise LoadError(fpath, f"expected {n} feature rows, found {len(rows)}")
    features = np.empty((n, fdim))
    for i, s in enumerate(rows):
        parts = s.split("\t")
        if len(parts) != fdim:
            raise LoadError(fpath, f"expected {fdim} values, found {len(parts)}", i + 1)
        try:
            features[i] = np.array(parts, dtype=np.float64)
        except ValueError:
            raise LoadError(fpath, "non-numeric feature value", i + 1) from None

    epath = d / "edges.tsv"
    edge_lines = _lines(epath) if (epath.exists() or n) else []
    edges = np.empty((len(edge_lines), 2), dtype=np.int64)
    for i, s in enumerate(edge_lines):
        parts = s.split("\t")
        try:
            u, v = int(parts[0]), int(parts[1])
        except (ValueError, IndexError):
            raise LoadError(epath, f"malformed edge line {s!r}", i + 1) from None
        if not (0 <= u < n and 0 <= v < n):
            raise LoadError(epath, f"edge ({u}, {v}) references a node outside [0, {n})", i + 1)
        edges[i] = u, v
    ds = Dataset(build_graph(edges, n), features, labels, num_classes,
                 manifest.get("name", d.name))
    return ds


def load_split(directory) -> Split | None:
    p = Path(directory) / "splits.json"
    if not p.is_file():
        return None
    return Split.from_dict(json.loads(p.read_text()))


def find_dataset(name_or_path) -> Path:
    """Resolve a dataset directory: literal path, then $PND_DATA_DIR/<name>, then ./data/<name>."""
    p = Path(name_or_path)
    if p.is_dir():
        return p
    candidates = []
    if os.environ.get(DATA_ENV):
        candidates.append(Path(os.environ[DATA_ENV]) / str(name_or_path))
    candidates.append(_REPO_DATA / str(name_or_path))
    for c in candidates:
        if c.is_dir():
            return c
    raise LoadError(p, "dataset directory not found (also searched "
                    + ", ".join(str(c) for c in candidates) + ")")


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------

def make_splits(labels, seed, per_class_train=20, per_class_val=30, inductive=False,
                inductive_frac=0.2, allow_fallback=True) -> Split:
    """Per-class uniform train/val sampling; the rest is the test pool.

    In inductive mode ⌊inductive_frac·|pool|⌋ pool nodes are held out as U_ind.
    """
    from .nn import make_rng
    labels = np.asarray(labels, dtype=np.int64)
    rng = make_rng(seed)
    train, val = [], []
    need = per_class_train + per_class_val
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        perm = rng.permutation(members)
        n_tr, n_va = per_class_train, per_class_val
        if len(members) < need:
            if not allow_fallback:
                raise SplitError(f"class {c} has {len(members)} nodes, needs {need}")
            n_tr = max(1, int(round(len(members) * per_class_train / need)))
            n_va = max(0, min(len(members) - n_tr - 1,
                              int(round(len(members) * per_class_val / need))))
            warnings.warn(f"class {c} has only {len(members)} nodes; "
                          f"using {n_tr} train / {n_va} val", stacklevel=2)
        train.append(perm[:n_tr])
        val.append(perm[n_tr:n_tr + n_va])
    train = np.concatenate(train) if train else np.zeros(0, np.int64)
    val = np.concatenate(val) if val else np.zeros(0, np.int64)
    taken = np.zeros(len(labels), bool)
    taken[train] = taken[val] = True
    pool = np.flatnonzero(~taken)
    ind = np.zeros(0, np.int64)
    if inductive:
        k = int(np.floor(inductive_frac * len(pool)))
        ind = rng.choice(pool, size=k, replace=False)
        pool = np.setdiff1d(pool, ind)
    split = Split(train, val, pool, ind)
    split.validate(len(labels))
    return split


def remove_inductive_edges(g: SparseGraph, ind) -> SparseGraph:
    """Drop every edge touching the inductive subset (ind-ind edges included)."""
    held = np.zeros(g.num_nodes, bool)
    held[np.asarray(ind, dtype=np.int64)] = True
    e = g.edges()
    keep = ~(held[e[:, 0]] | held[e[:, 1]])
    return build_graph(e[keep], g.num_nodes)


# ---------------------------------------------------------------------------
# synthetic graphs
# ---------------------------------------------------------------------------

def gen_chains(num_chains=30, length=8, num_classes=10, seed=0, feature_dim=None, noise=0.0):
    """Disjoint paths, one class per chain; only the base node (position 0) carries
    the one-hot class in its features.

    ``noise`` > 0 adds uniform(-noise, noise) to every feature entry, which gives
    otherwise identical nodes distinguishable inputs.  Returns
    (dataset, base_nodes, far_nodes, hops) where far nodes are > 2 hops from the base.
    """
    from .nn import make_rng
    if num_classes < 1 or num_chains % num_classes:
        raise ConfigError("num_chains must be a positive multiple of num_classes")
    if length < 1:
        raise ConfigError("chain length must be positive")
    feature_dim = num_classes if feature_dim is None else int(feature_dim)
    if feature_dim < num_classes:
        raise ConfigError("feature_dim must be at least num_classes")
    rng = make_rng(seed)
    chain_class = rng.permutation(np.repeat(np.arange(num_classes), num_chains // num_classes))
    n = num_chains * length
    labels = np.repeat(chain_class, length)
    hops = np.tile(np.arange(length), num_chains)
    starts = np.arange(num_chains) * length
    edges = np.concatenate([np.stack([s + np.arange(length - 1), s + np.arange(1, length)], 1)
                            for s in starts]) if length > 1 else np.zeros((0, 2), np.int64)
    features = np.zeros((n, feature_dim))
    if noise > 0:
        features += rng.uniform(-noise, noise, size=features.shape)
    features[starts, chain_class] += 1.0
    ds = Dataset(build_graph(edges, n), features, labels, num_classes, "chains")
    far = np.flatnonzero(hops > 2)
    return ds, starts, far, hops


def _class_degree_matrix(num_classes, other):
    """Symmetric m[a, b] (a != b) with every row summing to ``other``; circulant in class index."""
    k = num_classes
    m = np.zeros((k, k), dtype=np.int64)
    if other == 0:
        return m
    if k < 2:
        raise ConstructionError("cross-class neighbors requested with a single class")
    base, rem = divmod(other, k - 1)
    m += base
    np.fill_diagonal(m, 0)
    if rem:
        if rem * k % 2:
            raise ConstructionError(
                f"cannot spread {other} cross-class neighbors evenly over {k} classes")
        # rem-regular circulant graph over class ids
        for t in range(1, rem // 2 + 1):
            for a in range(k):
                m[a, (a + t) % k] += 1
                m[(a + t) % k, a] += 1
        if rem % 2:
            for a in range(k // 2):
                m[a, a + k // 2] += 1
                m[a + k // 2, a] += 1
    return m


def gen_regular_homophily(degree, h, num_classes, nodes_per_class, seed=0) -> Dataset:
    """d-regular graph in which every node has exactly round(h·d) same-class neighbors.

    Same-class edges are circulant within each class block; cross-class edges are
    bipartite circulants between class blocks.  The wiring is deterministic; ``seed``
    only shuffles node ids.  Features are the one-hot class.
    """
    from .nn import make_rng
    d, k, n = int(degree), int(num_classes), int(nodes_per_class)
    if not 0.0 <= h <= 1.0:
        raise ConstructionError("h must lie in [0, 1]")
    if (d * k * n) % 2:
        raise ConstructionError("d·|V| must be even")
    same = int(round(h * d))
    other = d - same
    if same > n - 1:
        raise ConstructionError(f"{same} same-class neighbors need more than {n} nodes per class")
    if same % 2 and n % 2:
        raise ConstructionError("odd same-class degree needs an even class size")
    m = _class_degree_matrix(k, other)
    if m.max(initial=0) > n:
        raise ConstructionError("class blocks too small for the cross-class degree")
    edges = []
    idx = np.arange(n)
    for a in range(k):
        off = a * n
        for t in range(1, same // 2 + 1):
            edges.append(np.stack([off + idx, off + (idx + t) % n], 1))
        if same % 2:
            half = idx[: n // 2]
            edges.append(np.stack([off + half, off + half + n // 2], 1))
        for b in range(a + 1, k):
            for t in range(m[a, b]):
                edges.append(np.stack([off + idx, b * n + (idx + t) % n], 1))
    edges = np.concatenate(edges) if edges else np.zeros((0, 2), np.int64)
    perm = make_rng(seed).permutation(k * n)
    labels = np.repeat(np.arange(k), n)[np.argsort(perm)]
    g = build_graph(perm[edges], k * n)
    if np.any(g.degrees != d):
        raise ConstructionError(f"circulant wiring failed to reach degree {d}")
    return Dataset(g, np.eye(k)[labels], labels, k, f"regular-d{d}-h{h:g}")


def synth_teacher_output(labels, num_classes, p, epsilon, q, star, rng=None, flips=None):
    """Idealized teacher probabilities.

    Correct rows carry ``p`` on the true class and (1-p)/(K-1) elsewhere.  The star
    node (true class 0) gets [q, (1-q)/(K-1), ...].  round(ε(|V|-1)) other nodes are
    flipped to a uniformly drawn wrong class, unless ``flips`` (node -> wrong class)
    is given explicitly.
    """
    labels = np.asarray(labels, dtype=np.int64)
    k = int(num_classes)
    n = len(labels)
    if k < 2 or not 1.0 / k < p <= 1.0:
        raise InputError("need 1/|Y| < p <= 1")
    if not 0.0 <= q < 1.0 / k:
        raise InputError("need 0 <= q < 1/|Y|")
    if not 0.0 <= epsilon < 1.0:
        raise InputError("need 0 <= epsilon < 1")
    if not 0 <= star < n or labels[star] != 0:
        raise InputError("star must be a node whose true class is 0")
    off = (1.0 - p) / (k - 1)
    predicted = labels.copy()
    if flips is None:
        rng = rng if rng is not None else np.random.default_rng(0)
        count = int(round(epsilon * (n - 1)))
        others = np.delete(np.arange(n), star)
        chosen = rng.choice(others, size=count, replace=False)
        shift = rng.integers(1, k, size=count)
        predicted[chosen] = (labels[chosen] + shift) % k
    else:
        for node, cls in dict(flips).items():
            if node == star or cls == labels[node]:
                raise InputError("flips must move non-star nodes to a wrong class")
            predicted[node] = cls
    P = np.full((n, k), off)
    P[np.arange(n), predicted] = p
    P[star] = (1.0 - q) / (k - 1)
    P[star, 0] = q
    return P
