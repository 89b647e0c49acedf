"""Build data/cora/ from the Cora parquet files shipped in the graphdatascience wheel.

The wheel carries the full 2708-node Cora citation graph (binary bag-of-words
features, 7 subjects).  We keep the largest connected component, which gives the
2485-node / 5069-edge graph commonly used for GNN-to-MLP distillation.

    pip download --no-deps graphdatascience -d /tmp/gds
    python scripts/prepare_cora.py /tmp/gds/graphdatascience-*.whl data/cora

Requires pandas + pyarrow (``pip install -e .[prep]``).
"""

import argparse
import io
import zipfile

import numpy as np
import pandas as pd
from scipy.sparse.csgraph import connected_components

from pndlab.datasets import Dataset, save_dataset
from pndlab.graph import build_graph

NODES = "graphdatascience/resources/cora/cora_nodes.parquet.gzip"
RELS = "graphdatascience/resources/cora/cora_rels.parquet.gzip"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("wheel")
    ap.add_argument("out")
    args = ap.parse_args()

    with zipfile.ZipFile(args.wheel) as z:
        nodes = pd.read_parquet(io.BytesIO(z.read(NODES)))
        rels = pd.read_parquet(io.BytesIO(z.read(RELS)))

    index = {pid: i for i, pid in enumerate(nodes["nodeId"])}
    edges = np.stack([rels["sourceNodeId"].map(index), rels["targetNodeId"].map(index)], 1)
    full = build_graph(edges, len(nodes))
    _, comp = connected_components(full.adjacency(), directed=False)
    keep = np.flatnonzero(comp == np.bincount(comp).argmax())
    remap = -np.ones(len(nodes), dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    e = full.edges()
    e = remap[e[(remap[e[:, 0]] >= 0) & (remap[e[:, 1]] >= 0)]]

    features = np.stack(nodes["features"].to_numpy())[keep].astype(np.float64)
    labels = nodes["subject"].to_numpy().astype(np.int64)[keep]
    ds = Dataset(build_graph(e, len(keep)), features, labels, 7, "cora")
    save_dataset(ds, args.out)
    print(f"{ds.name}: {ds.num_nodes} nodes, {ds.graph.num_edges} edges, "
          f"{ds.feature_dim} features, {ds.num_classes} classes -> {args.out}")


if __name__ == "__main__":
    main()
