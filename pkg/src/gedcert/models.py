"""Inference-only model zoo: the three certified architectures.

* `gcn`: L-layer graph convolution over attributes, returns pre-softmax
  node logits.
* `pippnp`: per-node MLP logits diffused through personalized PageRank
  with row-normalized adjacency (self-loops always forced).
* `graphcls`: one graph convolution, linear readout, mean pooling; returns
  graph logits.

Certificates compare pre-softmax scores throughout; softmax is order
preserving and never applied inside certified pipelines.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .graphs import AttributedGraph

ADJ_MODES = ("sym_norm_selfloops", "row_norm_selfloops", "row_norm")
ARCHS = ("gcn", "pippnp", "graphcls")


@dataclass
class GnnModel:
    arch: str
    layers: list  # list of (W, b) with chained dimensions
    adj_mode: str = "sym_norm_selfloops"
    alpha: Optional[float] = None   # pippnp teleport
    readout: Optional[np.ndarray] = None  # graphcls linear layer U

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise ValueError(f"unknown arch {self.arch!r}")
        if self.adj_mode not in ADJ_MODES:
            raise ValueError(f"unknown adj_mode {self.adj_mode!r}")
        layers = []
        for w, b in self.layers:
            w = np.asarray(w, dtype=float)
            b = np.asarray(b, dtype=float)
            if layers and layers[-1][0].shape[1] != w.shape[0]:
                raise ValueError("layer dimensions do not chain")
            if w.shape[1] != b.shape[0]:
                raise ValueError("bias length does not match layer width")
            layers.append((w, b))
        self.layers = layers
        if self.arch == "pippnp":
            if self.alpha is None or not (0.0 < self.alpha < 1.0):
                raise ValueError("pippnp needs teleport alpha in (0, 1)")
        if self.arch == "graphcls":
            if self.readout is None:
                raise ValueError("graphcls needs a linear readout matrix")
            self.readout = np.asarray(self.readout, dtype=float)
            if self.readout.shape[0] != self.layers[-1][0].shape[1]:
                raise ValueError("readout rows must match last layer width")

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def num_classes(self) -> int:
        if self.arch == "graphcls":
            return self.readout.shape[1]
        return self.layers[-1][0].shape[1]


def preprocess_adjacency(A: np.ndarray, mode: str) -> np.ndarray:
    """Degree-normalized adjacency used by the GCN forward pass."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if mode == "sym_norm_selfloops":
        a_hat = A + np.eye(len(A))
        d = a_hat.sum(axis=1)
        inv_sqrt = 1.0 / np.sqrt(d)
        return a_hat * inv_sqrt[:, None] * inv_sqrt[None, :]
    if mode == "row_norm_selfloops":
        a_hat = A + np.eye(len(A))
        return a_hat / a_hat.sum(axis=1, keepdims=True)
    if mode == "row_norm":
        d = A.sum(axis=1)
        if (d == 0).any():
            raise ValueError("row_norm undefined for zero-degree nodes")
        return A / d[:, None]
    raise ValueError(f"unknown adjacency mode {mode!r}")


def _forced_selfloops(A: np.ndarray) -> np.ndarray:
    a = np.asarray(A, dtype=float).copy()
    np.fill_diagonal(a, 1.0)
    return a


def gcn_forward(model: GnnModel, g: AttributedGraph,
                adj: Optional[np.ndarray] = None) -> np.ndarray:
    """Pre-softmax logits of an L-layer GCN: Z^l = A_hat H^l W^l + b^l."""
    if model.arch != "gcn":
        raise ValueError("model is not a gcn")
    a_hat = preprocess_adjacency(g.A, model.adj_mode) if adj is None else adj
    h = g.X.astype(float)
    z = None
    for l, (w, b) in enumerate(model.layers):
        z = a_hat @ h @ w + b
        if l < model.num_layers - 1:
            h = np.maximum(z, 0.0)
    return z


def mlp_forward(model: GnnModel, X: np.ndarray) -> np.ndarray:
    """Row-wise MLP used to produce the pippnp per-node logits H."""
    h = np.asarray(X, dtype=float)
    z = None
    for l, (w, b) in enumerate(model.layers):
        z = h @ w + b
        if l < model.num_layers - 1:
            h = np.maximum(z, 0.0)
    return z


def pippnp_forward(model: GnnModel, H: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Diffuse logits H through Pi = (1-alpha)(I - alpha D^-1 A)^-1.

    The adjacency gets its diagonal forced to 1 before degree computation,
    which keeps D^-1 A row stochastic and the system nonsingular. Solved by
    dense LU rather than forming Pi; softmax is omitted (monotone).
    """
    if model.arch != "pippnp":
        raise ValueError("model is not a pippnp")
    a = _forced_selfloops(A)
    d = a.sum(axis=1)
    p = a / d[:, None]
    n = len(a)
    lhs = np.eye(n) - model.alpha * p
    return np.linalg.solve(lhs, (1.0 - model.alpha) * np.asarray(H, dtype=float))


def pippnp_full_forward(model: GnnModel, g: AttributedGraph) -> np.ndarray:
    return pippnp_forward(model, mlp_forward(model, g.X.astype(float)), g.A)


def graphcls_forward(model: GnnModel, g: AttributedGraph) -> np.ndarray:
    """Graph logits: mean over nodes of ReLU(D^-1 A_hat X W) U."""
    if model.arch != "graphcls":
        raise ValueError("model is not a graphcls")
    a_hat = _forced_selfloops(g.A)
    d = a_hat.sum(axis=1)
    w, b = model.layers[0]
    hidden = np.maximum((a_hat / d[:, None]) @ g.X.astype(float) @ w + b, 0.0)
    return hidden.mean(axis=0) @ model.readout


def predict(model: GnnModel, g: AttributedGraph):
    """Predicted labels: per-node vector for node models, int for graphcls."""
    if model.arch == "gcn":
        return gcn_forward(model, g).argmax(axis=1)
    if model.arch == "pippnp":
        return pippnp_full_forward(model, g).argmax(axis=1)
    return int(graphcls_forward(model, g).argmax())


# ---------------------------------------------------------------------------
# weight files

def model_to_json(model: GnnModel) -> dict:
    doc = {
        "arch": model.arch,
        "adj_mode": model.adj_mode,
        "layers": [{"W": w.tolist(), "b": b.tolist()} for w, b in model.layers],
    }
    if model.alpha is not None:
        doc["alpha"] = model.alpha
    if model.readout is not None:
        doc["U"] = model.readout.tolist()
    return doc


def model_from_json(doc: dict) -> GnnModel:
    layers = [(np.asarray(l["W"], dtype=float), np.asarray(l["b"], dtype=float))
              for l in doc["layers"]]
    return GnnModel(
        arch=doc["arch"],
        layers=layers,
        adj_mode=doc.get("adj_mode", "sym_norm_selfloops"),
        alpha=doc.get("alpha"),
        readout=np.asarray(doc["U"], dtype=float) if "U" in doc else None,
    )


def load_model(path: str) -> GnnModel:
    with open(path) as fh:
        return model_from_json(json.load(fh))


def save_model(model: GnnModel, path: str):
    with open(path, "w") as fh:
        json.dump(model_to_json(model), fh)
        fh.write("\n")


def random_model(arch: str, dims: list, seed: int, adj_mode: str = "sym_norm_selfloops",
                 alpha: float = 0.15, num_classes: Optional[int] = None,
                 scale: float = 1.0) -> GnnModel:
    """Seeded random weights for testing; `dims` chains input to output."""
    rng = np.random.default_rng(seed)
    layers = []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        w = rng.normal(0.0, scale / np.sqrt(d_in), size=(d_in, d_out))
        b = rng.normal(0.0, 0.1 * scale, size=d_out)
        layers.append((w, b))
    readout = None
    if arch == "graphcls":
        readout = rng.normal(0.0, scale / np.sqrt(dims[-1]),
                             size=(dims[-1], num_classes or 2))
    return GnnModel(arch=arch, layers=layers, adj_mode=adj_mode,
                    alpha=alpha if arch == "pippnp" else None, readout=readout)
