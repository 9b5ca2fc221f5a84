"""Hidden-layer interception and 2-D latent projection via an autoencoder.

The recurrent summary of a trained sequence network is captured per instance,
compressed through a two-dense-layer autoencoder with a 2-D bottleneck, and
the resulting plane is clustered to make the eyeball-a-scatter-plot workflow
reproducible: k-means with restarts, purity, and per-cluster lists of
instances whose predicted label disagrees with their cluster.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import seqnet
from .encode import SequenceDataset


@dataclass
class ActivationMatrix:
    values: np.ndarray          # (M, width of intercepted layer)
    layer: int
    true_labels: np.ndarray     # (M,) int
    predicted_labels: np.ndarray
    label_names: list[str]
    case_ids: list[str] = field(default_factory=list)


def capture_activations(model: seqnet.SeqNetModel, data: SequenceDataset,
                        layer: int = 0) -> ActivationMatrix:
    """Record the last true-masked recurrent state (both directions
    concatenated for a BiLSTM) plus true and predicted labels."""
    acts = seqnet.hidden_summary(model, data.X, data.mask, layer=layer)
    probs = seqnet.forward(model, data.X, data.mask)
    return ActivationMatrix(values=acts, layer=layer,
                            true_labels=np.asarray(data.Y, dtype=np.int64),
                            predicted_labels=np.argmax(probs, axis=1),
                            label_names=list(data.label_names),
                            case_ids=list(data.case_ids))


@dataclass
class Autoencoder:
    params: dict[str, np.ndarray]
    n1: int
    seed: int
    input_mean: np.ndarray
    input_scale: float
    error_curve: list[float] = field(default_factory=list)
    final_mse: float = float("nan")
    diverged: bool = False


def _ae_forward(params, Z):
    h1 = np.tanh(Z @ params["enc1_W"] + params["enc1_b"])
    code = h1 @ params["enc2_W"] + params["enc2_b"]
    h2 = np.tanh(code @ params["dec1_W"] + params["dec1_b"])
    recon = h2 @ params["dec2_W"] + params["dec2_b"]
    return h1, code, h2, recon


def fit_autoencoder(acts: ActivationMatrix, n1: int, epochs: int = 400,
                    lr: float = 0.05, seed: int = 0) -> Autoencoder:
    """Minimize mean squared reconstruction error by full-batch gradient
    descent. Inputs are centered and globally scaled internally (stored on the
    model); the error curve is reported in original units."""
    if n1 < 2:
        raise ValueError("n1 must be >= 2")
    X = np.asarray(acts.values, dtype=float)
    mean = X.mean(axis=0)
    scale = float(np.sqrt(np.mean((X - mean) ** 2))) or 1.0
    Z = (X - mean) / scale
    D = X.shape[1]
    rng = np.random.default_rng(seed)

    def uniform(shape, fan_in):
        r = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-r, r, size=shape)

    params = {
        "enc1_W": uniform((D, n1), D), "enc1_b": np.zeros(n1),
        "enc2_W": uniform((n1, 2), n1), "enc2_b": np.zeros(2),
        "dec1_W": uniform((2, n1), 2), "dec1_b": np.zeros(n1),
        "dec2_W": uniform((n1, D), n1), "dec2_b": np.zeros(D),
    }
    ae = Autoencoder(params=params, n1=n1, seed=seed, input_mean=mean,
                     input_scale=scale)
    M = len(Z)
    snapshot = {k: v.copy() for k, v in params.items()}
    for _ in range(epochs):
        h1, code, h2, recon = _ae_forward(params, Z)
        err = recon - Z
        mse = float(np.mean(err * err))
        if not np.isfinite(mse):
            ae.params = snapshot
            ae.diverged = True
            break
        snapshot = {k: v.copy() for k, v in params.items()}
        ae.error_curve.append(mse * scale * scale)
        dr = 2.0 * err / err.size
        g = {}
        g["dec2_W"] = h2.T @ dr
        g["dec2_b"] = dr.sum(axis=0)
        dh2 = (dr @ params["dec2_W"].T) * (1.0 - h2 * h2)
        g["dec1_W"] = code.T @ dh2
        g["dec1_b"] = dh2.sum(axis=0)
        dcode = dh2 @ params["dec1_W"].T
        g["enc2_W"] = h1.T @ dcode
        g["enc2_b"] = dcode.sum(axis=0)
        dh1 = (dcode @ params["enc2_W"].T) * (1.0 - h1 * h1)
        g["enc1_W"] = Z.T @ dh1
        g["enc1_b"] = dh1.sum(axis=0)
        norm = np.sqrt(sum(float(np.sum(v * v)) for v in g.values()))
        if norm > seqnet.CLIP_NORM:
            for v in g.values():
                v *= seqnet.CLIP_NORM / norm
        for k in params:
            params[k] -= lr * g[k]
    _, _, _, recon = _ae_forward(ae.params, Z)
    ae.final_mse = float(np.mean((recon - Z) ** 2)) * scale * scale
    return ae


@dataclass
class LatentProjection:
    coordinates: np.ndarray      # (M, 2)
    true_labels: np.ndarray
    predicted_labels: np.ndarray
    label_names: list[str]
    case_ids: list[str] = field(default_factory=list)
    clusters: np.ndarray | None = None
    purity: float = float("nan")

    def to_csv(self, meta: str = "") -> str:
        lines = [f"# {meta}"] if meta else []
        lines.append("id,x,y,true,predicted,cluster")
        for i in range(len(self.coordinates)):
            cid = self.case_ids[i] if self.case_ids else str(i)
            cl = int(self.clusters[i]) if self.clusters is not None else ""
            lines.append(
                f"{cid},{self.coordinates[i, 0]!r},{self.coordinates[i, 1]!r},"
                f"{self.label_names[self.true_labels[i]]},"
                f"{self.label_names[self.predicted_labels[i]]},{cl}")
        return "\n".join(lines) + "\n"


def project(ae: Autoencoder, acts: ActivationMatrix) -> LatentProjection:
    """Encoder forward pass only; purely a function of (ae, acts)."""
    X = np.asarray(acts.values, dtype=float)
    if X.shape[1] != ae.input_mean.shape[0]:
        raise ValueError(f"activation width {X.shape[1]} does not match autoencoder "
                         f"input {ae.input_mean.shape[0]}")
    Z = (X - ae.input_mean) / ae.input_scale
    h1 = np.tanh(Z @ ae.params["enc1_W"] + ae.params["enc1_b"])
    code = h1 @ ae.params["enc2_W"] + ae.params["enc2_b"]
    return LatentProjection(coordinates=code, true_labels=acts.true_labels,
                            predicted_labels=acts.predicted_labels,
                            label_names=acts.label_names, case_ids=acts.case_ids)


# ----------------------------------------------------------------- k-means

def kmeans(X, k: int, seed: int, restarts: int = 20, max_iter: int = 100):
    """Lloyd iterations from ``restarts`` seeded random initializations;
    returns (labels, centers, inertia) of the best restart."""
    X = np.asarray(X, dtype=float)
    if k > len(X):
        raise ValueError(f"k={k} exceeds {len(X)} points")
    best = None
    for r in range(restarts):
        rng = np.random.default_rng(seed + r)
        centers = X[rng.choice(len(X), size=k, replace=False)].copy()
        labels = np.zeros(len(X), dtype=np.int64)
        for _ in range(max_iter):
            d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new_labels = np.argmin(d2, axis=1)
            for c in range(k):
                members = X[new_labels == c]
                if len(members):
                    centers[c] = members.mean(axis=0)
                else:
                    far = int(np.argmax(d2[np.arange(len(X)), new_labels]))
                    centers[c] = X[far]
                    new_labels[far] = c
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
        inertia = float(((X - centers[labels]) ** 2).sum())
        if best is None or inertia < best[2]:
            best = (labels.copy(), centers.copy(), inertia)
    return best


def silhouette_score(X, labels) -> float:
    """Mean silhouette over all points; single-member clusters score 0."""
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if len(uniq) < 2:
        return 0.0
    d = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
    scores = np.zeros(len(X))
    for i in range(len(X)):
        same = labels == labels[i]
        n_same = same.sum()
        if n_same <= 1:
            continue
        a = d[i, same].sum() / (n_same - 1)
        b = min(d[i, labels == c].mean() for c in uniq if c != labels[i])
        scores[i] = (b - a) / max(a, b) if max(a, b) > 0 else 0.0
    return float(scores.mean())


def _purity(clusters, true_labels, k) -> float:
    correct = 0
    for c in range(k):
        members = true_labels[clusters == c]
        if len(members):
            correct += int(np.bincount(members).max())
    return correct / len(true_labels)


@dataclass
class ClusterReport:
    k: int
    purity: float
    majority_label: list[str]
    cluster_sizes: list[int]
    misclassified: dict[int, list[str]]   # cluster -> case ids predicted off-majority

    def to_dict(self):
        return {"k": self.k, "purity": self.purity,
                "majority_label": self.majority_label,
                "cluster_sizes": self.cluster_sizes,
                "misclassified": {str(c): ids for c, ids in self.misclassified.items()}}


def analyze_misclassifications(proj: LatentProjection, k: int,
                               seed: int = 0) -> ClusterReport:
    """Cluster the 2-D coordinates (k-means, 20 seeded restarts, best inertia)
    and list, per cluster, the instances whose predicted label differs from
    the cluster's majority true label."""
    if k < 1:
        raise ValueError("k must be >= 1")
    labels, _, _ = kmeans(proj.coordinates, k, seed=seed)
    proj.clusters = labels
    proj.purity = _purity(labels, proj.true_labels, k)
    majority, sizes, suspects = [], [], {}
    for c in range(k):
        members = np.flatnonzero(labels == c)
        sizes.append(len(members))
        if len(members) == 0:
            majority.append("")
            suspects[c] = []
            continue
        maj = int(np.bincount(proj.true_labels[members]).argmax())
        majority.append(proj.label_names[maj])
        ids = []
        for i in members:
            if proj.predicted_labels[i] != maj:
                ids.append(proj.case_ids[i] if proj.case_ids else str(i))
        suspects[c] = ids
    return ClusterReport(k=k, purity=proj.purity, majority_label=majority,
                         cluster_sizes=sizes, misclassified=suspects)


@dataclass
class AEGridRow:
    n1: int
    mse: float
    silhouette: float
    best: bool = False


def grid_search_ae(acts: ActivationMatrix, candidates, epochs: int = 400,
                   lr: float = 0.05, seed: int = 0, k: int | None = None):
    """Fit one autoencoder per bottleneck-feeder width and rank projections by
    the k-means silhouette of the latent plane (sparser wins); all projections
    are returned for inspection."""
    if not list(candidates):
        raise ValueError("empty candidate set")
    if k is None:
        k = len(set(acts.true_labels.tolist()))
    rows, projections = [], []
    for i, n1 in enumerate(candidates):
        ae = fit_autoencoder(acts, n1=n1, epochs=epochs, lr=lr, seed=seed + i)
        proj = project(ae, acts)
        labels, _, _ = kmeans(proj.coordinates, k, seed=seed + i)
        sil = silhouette_score(proj.coordinates, labels)
        rows.append(AEGridRow(n1=n1, mse=ae.final_mse, silhouette=sil))
        projections.append(proj)
    order = sorted(range(len(rows)), key=lambda j: (-rows[j].silhouette, rows[j].mse, j))
    rows = [rows[j] for j in order]
    projections = [projections[j] for j in order]
    rows[0].best = True
    return rows, projections
