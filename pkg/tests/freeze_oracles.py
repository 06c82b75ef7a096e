"""Regenerate tests/data/frozen_oracles.json from the oracles alone.

Run ``python tests/freeze_oracles.py``; the package is not imported.
"""
import json
from pathlib import Path

import numpy as np

import oracles

OUT = Path(__file__).parent / "data" / "frozen_oracles.json"

# 1-2-1 network with hand-set parameters, flat order W1, b1, W2, b2
NET_DIMS = [1, 2, 1]
NET_FLAT = [0.7, -0.4, 0.1, 0.25, 1.5, -0.8, 0.05]
NET_X = [[0.5], [-1.0], [2.0]]
NET_T = [0.3, 0.1, -0.2]


def instances():
    rng = np.random.default_rng(20240611)
    blobs = np.vstack([rng.normal(0, 0.3, (12, 2)), rng.normal(3, 0.3, (12, 2)),
                       rng.uniform(-2, 5, (6, 2))])
    oc = rng.normal(size=(40, 2))
    pca = rng.normal(size=(25, 4)) @ np.diag([3.0, 2.0, 0.5, 0.1])
    return blobs, oc, pca


def main():
    blobs, oc, pca = instances()
    grads = oracles.fd_gradients(NET_DIMS, np.array(NET_FLAT), np.array(NET_X), np.array(NET_T))
    labels, core = oracles.brute_dbscan(blobs, 0.6, 4)
    _, obj = oracles.one_class_dual_pgd(oc, 0.2, 0.5)
    vals, vecs = oracles.eig_pca(pca, 2)
    frozen = {
        "mlp_121": {"dims": NET_DIMS, "flat": NET_FLAT, "x": NET_X, "t": NET_T,
                    "grads": grads.tolist()},
        "dbscan_blobs": {"eps": 0.6, "min_pts": 4, "labels": labels.tolist(),
                         "core": core.tolist()},
        "one_class": {"nu": 0.2, "gamma": 0.5, "objective": obj},
        "pca": {"variances": vals.tolist(), "components": vecs.tolist()},
    }
    OUT.write_text(json.dumps(frozen, indent=1))


if __name__ == "__main__":
    main()
