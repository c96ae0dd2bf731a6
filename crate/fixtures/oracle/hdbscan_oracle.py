"""Regenerates hdbscan_oracle.json with scikit-learn's HDBSCAN as reference."""
import json

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial.distance import cdist
from sklearn.cluster import HDBSCAN
from sklearn.datasets import make_blobs, make_moons


def tied_points(x, min_cluster_size):
    """Points whose label depends on binary merge order at tied distances.

    When three or more components join at exactly the same mutual
    reachability, a binary hierarchy picks an arbitrary pairing. Points in
    the small components of such a merge can end up in different clusters
    depending on that pairing, so they are excluded from comparison.
    """
    n = len(x)
    d = cdist(x, x)
    core = np.sort(d, axis=1)[:, min_cluster_size - 1]
    reach = np.maximum(d, np.maximum(core[:, None], core[None, :]))
    mst = minimum_spanning_tree(reach).tocoo()
    edges = sorted(zip(mst.data, mst.row, mst.col))
    parent = list(range(n))
    members = {i: [i] for i in range(n)}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    out = set()
    i = 0
    while i < len(edges):
        j = i
        while j < len(edges) and edges[j][0] == edges[i][0]:
            j += 1
        before = {}
        for _, a, b in edges[i:j]:
            for p in (a, b):
                r = find(p)
                before[r] = list(members[r])
        for _, a, b in edges[i:j]:
            ra, rb = find(a), find(b)
            if ra != rb:
                lo, hi = min(ra, rb), max(ra, rb)
                parent[hi] = lo
                members[lo] = members[lo] + members.pop(hi)
        groups = {}
        for r, pts in before.items():
            groups.setdefault(find(r), []).append(pts)
        for parts in groups.values():
            if len(parts) >= 3:
                for pts in parts:
                    if len(pts) < min_cluster_size:
                        out.update(int(p) for p in pts)
        i = j
    return sorted(out)


def dataset(name, x, min_cluster_size):
    x = np.asarray(x, dtype=np.float32)
    out = {"name": name, "min_cluster_size": min_cluster_size,
           "points": x.tolist(),
           "tied_points": tied_points(x.astype(np.float64), min_cluster_size)}
    for method in ("leaf", "eom"):
        model = HDBSCAN(min_cluster_size=min_cluster_size,
                        cluster_selection_method=method)
        out[method] = model.fit_predict(x.astype(np.float64)).tolist()
    return out


rng = np.random.default_rng(7)
sets = []
x, _ = make_blobs(n_samples=150, centers=[[0, 0], [8, 8], [-8, 8]],
                  cluster_std=0.6, random_state=1)
sets.append(dataset("blobs3", x, 5))
x, _ = make_blobs(n_samples=[60, 40, 30, 80], centers=[[0, 0], [6, 0], [0, 6], [7, 7]],
                  cluster_std=[0.5, 0.7, 0.4, 0.9], random_state=2)
noise = rng.uniform(-3, 10, size=(30, 2))
sets.append(dataset("blobs_noise", np.vstack([x, noise]), 8))
x, _ = make_moons(n_samples=200, noise=0.05, random_state=3)
sets.append(dataset("moons", x, 10))
x, _ = make_blobs(n_samples=300, n_features=10, centers=5, cluster_std=1.0, random_state=4)
sets.append(dataset("blobs10d", x, 6))

with open("hdbscan_oracle.json", "w") as f:
    json.dump(sets, f)
for s in sets:
    print(s["name"], len(set(s["leaf"])) - (-1 in s["leaf"]), len(set(s["eom"])) - (-1 in s["eom"]),
          sum(1 for l in s["leaf"] if l < 0), len(s["tied_points"]))
