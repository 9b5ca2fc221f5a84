"""Model-agnostic explanation toolbox.

Everything here talks to a black box only through the ``Predictor`` contract:
a pure callable mapping an (M, F) matrix to an (M, C) class-probability
matrix. Curves (PDP / ICE / ALE), global surrogates fit on black-box outputs,
local kernel-weighted linear surrogates, and a greedy coverage pick that
summarizes many local explanations globally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import forest as forest_mod
from . import svgplot


# ---------------------------------------------------------------- curves

@dataclass
class CurveSet:
    kind: str                 # PDP | ICE | ALE
    feature: str
    grid: np.ndarray
    values: np.ndarray        # (len(grid),) for PDP/ALE, (rows, len(grid)) for ICE
    target_class: int
    extrapolated: bool = False
    merged_intervals: int = 0

    def to_csv(self, meta: str = "") -> str:
        lines = [f"# {meta}"] if meta else []
        if self.values.ndim == 1:
            lines.append(f"{self.feature},{self.kind.lower()}")
            for g, v in zip(self.grid, self.values):
                lines.append(f"{g!r},{v!r}")
        else:
            header = [self.feature] + [f"instance_{i}" for i in range(len(self.values))]
            lines.append(",".join(header))
            for j, g in enumerate(self.grid):
                lines.append(",".join([repr(float(g))] + [repr(float(v)) for v in self.values[:, j]]))
        return "\n".join(lines) + "\n"

    def to_svg(self, meta: str = "") -> str:
        series = ({self.kind: list(self.values)} if self.values.ndim == 1 else
                  {f"i{k}": list(row) for k, row in enumerate(self.values[:40])})
        return svgplot.line_chart(list(self.grid), series,
                                  title=f"{self.kind} of {self.feature}", meta=meta)


def _resolve(feature, feature_names):
    if isinstance(feature, str):
        if feature_names is None or feature not in feature_names:
            raise ValueError(f"unknown feature {feature!r}")
        j = feature_names.index(feature)
        return j, feature
    j = int(feature)
    return j, (feature_names[j] if feature_names else f"x{j}")


def _ice_matrix(predictor, X, j, grid, class_index):
    rows = []
    for g in grid:
        Xg = X.copy()
        Xg[:, j] = g
        rows.append(predictor(Xg)[:, class_index])
    return np.stack(rows, axis=1)  # (instances, grid)


def ice(predictor, X, feature, grid=None, class_index: int = 0,
        feature_names=None) -> CurveSet:
    """One curve per background row: prediction as the feature sweeps the grid."""
    X = np.asarray(X, dtype=float)
    if len(X) == 0:
        raise ValueError("empty background")
    j, name = _resolve(feature, feature_names)
    if grid is None:
        grid = np.unique(np.quantile(X[:, j], np.linspace(0, 1, 11)))
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be non-empty and strictly increasing")
    extrapolated = bool(grid.min() < X[:, j].min() or grid.max() > X[:, j].max())
    values = _ice_matrix(predictor, X, j, grid, class_index)
    return CurveSet(kind="ICE", feature=name, grid=grid, values=values,
                    target_class=class_index, extrapolated=extrapolated)


def pdp(predictor, X, feature, grid=None, class_index: int = 0,
        feature_names=None) -> CurveSet:
    """Monte-Carlo partial dependence over the full background: the mean of
    the ICE curves, taken over the same floating-point evaluations."""
    curves = ice(predictor, X, feature, grid, class_index, feature_names)
    return CurveSet(kind="PDP", feature=curves.feature, grid=curves.grid,
                    values=curves.values.mean(axis=0),
                    target_class=class_index, extrapolated=curves.extrapolated)


def ale(predictor, X, feature, n_intervals: int = 10, class_index: int = 0,
        feature_names=None) -> CurveSet:
    """Accumulated local effects over equal-frequency intervals.

    Per interval, the mean prediction difference between its upper and lower
    boundary over the rows whose value falls inside; differences accumulate
    and the curve is centered to mean zero. Intervals left empty after
    boundary deduplication merge into their left neighbor.
    """
    X = np.asarray(X, dtype=float)
    if n_intervals < 1:
        raise ValueError("n_intervals must be >= 1")
    j, name = _resolve(feature, feature_names)
    vals = X[:, j]
    if len(np.unique(vals)) < 2:
        raise ValueError(f"feature {name!r} has fewer than 2 distinct values")
    bounds = np.unique(np.quantile(vals, np.linspace(0, 1, n_intervals + 1)))
    k_eff = len(bounds) - 1
    merged = (n_intervals - k_eff)
    which = np.clip(np.searchsorted(bounds, vals, side="left"), 1, k_eff)
    effects = np.zeros(k_eff)
    for k in range(1, k_eff + 1):
        rows = np.flatnonzero(which == k)
        if rows.size == 0:
            merged += 1
            continue
        hi = X[rows].copy(); hi[:, j] = bounds[k]
        lo = X[rows].copy(); lo[:, j] = bounds[k - 1]
        diff = predictor(hi)[:, class_index] - predictor(lo)[:, class_index]
        effects[k - 1] = float(diff.mean())
    values = np.concatenate([[0.0], np.cumsum(effects)])
    values = values - values.mean()
    return CurveSet(kind="ALE", feature=name, grid=bounds, values=values,
                    target_class=class_index, merged_intervals=merged)


# ------------------------------------------------------- global surrogate

@dataclass
class SurrogateReport:
    kind: str
    r2_per_class: list[float]
    agreement: float
    degenerate: bool = False


@dataclass
class LinearSurrogate:
    coef: np.ndarray       # (F + 1, C), first row is the intercept
    kind: str = "linear"

    def predict_proba(self, X):
        X = np.asarray(X, dtype=float)
        return np.hstack([np.ones((len(X), 1)), X]) @ self.coef


@dataclass
class TreeSurrogate:
    root: forest_mod.TreeNode
    n_classes: int
    kind: str = "tree"

    def predict_proba(self, X):
        X = np.asarray(X, dtype=float)
        out = np.empty((len(X), self.n_classes))
        forest_mod._tree_proba(self.root, X, out, np.arange(len(X)))
        return out


def fit_global_surrogate(predictor, X, surrogate_kind: str = "tree",
                         depth: int | None = 3, lam: float = 0.0):
    """Fit an interpretable stand-in on the black box's own predictions.

    The black box is evaluated on ``X``; the surrogate is trained against
    those outputs and scored by per-class R^2 on the probabilities plus the
    label agreement rate. Fidelity is measured against the black box, never
    against ground truth.
    """
    X = np.asarray(X, dtype=float)
    if len(X) == 0:
        raise ValueError("empty background")
    probs = predictor(X)
    labels = np.argmax(probs, axis=1)
    n_classes = probs.shape[1]
    if surrogate_kind == "linear":
        A = np.hstack([np.ones((len(X), 1)), X])
        if lam > 0:
            reg = lam * np.eye(A.shape[1]); reg[0, 0] = 0.0
            coef = np.linalg.solve(A.T @ A + reg, A.T @ probs)
        else:
            coef, *_ = np.linalg.lstsq(A, probs, rcond=None)
        model = LinearSurrogate(coef=coef)
    elif surrogate_kind == "tree":
        rng = np.random.default_rng(0)
        root = forest_mod.fit_tree(X, labels, max_features=X.shape[1], rng=rng,
                                   min_leaf=1, max_depth=depth, n_classes=n_classes)
        model = TreeSurrogate(root=root, n_classes=n_classes)
    else:
        raise ValueError(f"unknown surrogate kind {surrogate_kind!r}")
    approx = model.predict_proba(X)
    r2, degenerate = [], False
    for c in range(n_classes):
        sst = float(np.sum((probs[:, c] - probs[:, c].mean()) ** 2))
        if sst <= 1e-12 * len(X):  # constant output up to rounding
            r2.append(float("nan"))
            degenerate = True
            continue
        sse = float(np.sum((probs[:, c] - approx[:, c]) ** 2))
        r2.append(1.0 - sse / sst)
    agreement = float(np.mean(np.argmax(approx, axis=1) == labels))
    return model, SurrogateReport(kind=surrogate_kind, r2_per_class=r2,
                                  agreement=agreement, degenerate=degenerate)


# ----------------------------------------------------------------- LIME

def perturb(instance, X, n_samples: int, seed: int, categorical):
    """Draw LIME-style perturbations around one instance.

    Categorical columns keep the instance value with probability 0.5, else
    redraw from the column's empirical background distribution; numeric
    columns get gaussian noise scaled by the background standard deviation.
    Returns (samples, Z): Z is the binary interpretable representation, 1
    where a sample agrees with the instance (exactly for categoricals, within
    half a background standard deviation for numerics). Row 0 is always the
    unperturbed instance.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    X = np.asarray(X, dtype=float)
    instance = np.asarray(instance, dtype=float)
    n_features = X.shape[1]
    categorical = np.asarray(categorical, dtype=bool)
    rng = np.random.default_rng(seed)
    samples = np.tile(instance, (n_samples, 1))
    for j in range(n_features):
        col = X[:, j]
        if categorical[j]:
            keep = rng.random(n_samples) < 0.5
            draws = rng.choice(col, size=n_samples, replace=True)
            samples[~keep, j] = draws[~keep]
        else:
            sd = float(col.std())
            samples[:, j] = instance[j] + sd * rng.standard_normal(n_samples)
    samples[0] = instance
    Z = np.empty((n_samples, n_features))
    for j in range(n_features):
        if categorical[j]:
            Z[:, j] = (samples[:, j] == instance[j]).astype(float)
        else:
            sd = float(X[:, j].std())
            Z[:, j] = (np.abs(samples[:, j] - instance[j]) <= 0.5 * sd).astype(float)
    return samples, Z


def kernel_weight(distance, sigma: float):
    """exp(-d^2 / sigma^2) similarity weight."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    d = np.asarray(distance, dtype=float)
    return np.exp(-(d ** 2) / sigma ** 2)


def _cosine_distance_to_ones(Z):
    norms = np.sqrt((Z * Z).sum(axis=1))
    ref = np.sqrt(Z.shape[1])
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = Z.sum(axis=1) / (norms * ref)
    cos = np.where(norms == 0, 0.0, cos)
    return 1.0 - cos


def _wls(Z, y, w, ridge: float):
    """Weighted least squares with an unpenalized intercept; returns
    (intercept, coefs, weighted SSE)."""
    A = np.hstack([np.ones((len(Z), 1)), Z])
    Aw = A * w[:, None]
    G = A.T @ Aw
    reg = ridge * np.eye(A.shape[1]); reg[0, 0] = 0.0
    beta = np.linalg.solve(G + reg, Aw.T @ y)
    resid = y - A @ beta
    return float(beta[0]), beta[1:], float(np.sum(w * resid * resid))


def _forward_select(Z, y, w, K: int, ridge: float):
    """Greedy selection of K columns by weighted residual reduction."""
    selected: list[int] = []
    remaining = list(range(Z.shape[1]))
    for _ in range(min(K, Z.shape[1])):
        best = None
        for j in remaining:
            cols = selected + [j]
            _, _, sse = _wls(Z[:, cols], y, w, ridge)
            if best is None or sse < best[0]:
                best = (sse, j)
        selected.append(best[1])
        remaining.remove(best[1])
    return sorted(selected)


def _lasso_select(Z, y, w, K: int, n_iter: int = 200):
    """Coordinate-descent lasso path; shrink lambda until K columns survive."""
    sw = np.sqrt(w)
    Zw = Z * sw[:, None]
    yw = y * sw
    Zc = Zw - Zw.mean(axis=0)
    yc = yw - yw.mean()
    lam_max = np.max(np.abs(Zc.T @ yc)) / len(y)
    lam = lam_max
    beta = np.zeros(Z.shape[1])
    col_sq = (Zc * Zc).sum(axis=0) / len(y)
    for _ in range(60):
        for _ in range(n_iter):
            for j in range(Z.shape[1]):
                if col_sq[j] == 0:
                    continue
                r = yc - Zc @ beta + Zc[:, j] * beta[j]
                rho = float(Zc[:, j] @ r) / len(y)
                beta[j] = np.sign(rho) * max(abs(rho) - lam, 0.0) / col_sq[j]
        if np.count_nonzero(beta) >= K or lam < 1e-10:
            break
        lam *= 0.7
    order = np.argsort(-np.abs(beta), kind="stable")
    return sorted(int(j) for j in order[:K] if beta[j] != 0.0) or [int(order[0])]


@dataclass
class Explanation:
    instance_id: str
    target_class: str
    weights: dict[str, float]
    intercept: float
    fidelity: float
    kernel_width: float
    degenerate: bool = False

    def ranked_features(self) -> list[str]:
        return [k for k, _ in sorted(self.weights.items(),
                                     key=lambda kv: (-abs(kv[1]), kv[0]))]

    def to_dict(self) -> dict:
        return {"instance": self.instance_id, "class": self.target_class,
                "weights": self.weights, "intercept": self.intercept,
                "fidelity": self.fidelity, "kernel_width": self.kernel_width,
                "degenerate": self.degenerate}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_svg(self, meta: str = "") -> str:
        items = sorted(self.weights.items(), key=lambda kv: (-abs(kv[1]), kv[0]))
        return svgplot.barh_chart([k for k, _ in items], [v for _, v in items],
                                  title=f"local weights for class {self.target_class}",
                                  meta=meta)


def lime_explain(predictor, instance, X, class_index: int, K: int,
                 n_samples: int = 5000, sigma: float | None = None,
                 seed: int = 0, categorical=None, feature_names=None,
                 instance_id: str = "0", class_label: str | None = None,
                 selection: str = "forward", ridge: float = 1e-3) -> Explanation:
    """Local surrogate: perturb, weight by kernel similarity, select K
    features, then ridge-regularized weighted least squares."""
    if K < 1:
        raise ValueError("K must be >= 1")
    X = np.asarray(X, dtype=float)
    instance = np.asarray(instance, dtype=float)
    n_features = X.shape[1]
    if categorical is None:
        categorical = [True] * n_features
    if feature_names is None:
        feature_names = [f"x{j}" for j in range(n_features)]
    if sigma is None:
        sigma = 0.75 * np.sqrt(n_features)
    samples, Z = perturb(instance, X, n_samples, seed, categorical)
    y = predictor(samples)[:, class_index]
    w = kernel_weight(_cosine_distance_to_ones(Z), sigma)
    label = class_label if class_label is not None else str(class_index)
    wmean = float(np.sum(w * y) / np.sum(w))
    sst = float(np.sum(w * (y - wmean) ** 2))
    if sst <= 1e-12 * float(np.sum(w)):  # predictor constant around the instance
        return Explanation(instance_id=instance_id, target_class=label,
                           weights={}, intercept=wmean, fidelity=float("nan"),
                           kernel_width=float(sigma), degenerate=True)
    if selection == "lasso":
        cols = _lasso_select(Z, y, w, K)
    else:
        cols = _forward_select(Z, y, w, K, ridge)
    intercept, coefs, sse = _wls(Z[:, cols], y, w, ridge)
    weights = {feature_names[j]: float(c) for j, c in zip(cols, coefs)}
    return Explanation(instance_id=instance_id, target_class=label,
                       weights=weights, intercept=intercept,
                       fidelity=1.0 - sse / sst, kernel_width=float(sigma))


# ------------------------------------------------------- submodular pick

@dataclass
class GlobalSummary:
    picked: list[str]
    explanations: list[Explanation]
    coverage: float
    feature_importance: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "picked": self.picked, "coverage": self.coverage,
            "feature_importance": self.feature_importance,
            "explanations": [e.to_dict() for e in self.explanations],
        }, indent=2)


def submodular_pick(explanations: list[Explanation], budget: int) -> GlobalSummary:
    """Greedy pick of instances whose explanations maximize weighted feature
    coverage: feature importance is sqrt of the summed |weight| over
    candidates; a picked set covers the union of its nonzero features."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if not explanations:
        raise ValueError("empty candidate set")
    importance: dict[str, float] = {}
    for e in explanations:
        for feat, wgt in e.weights.items():
            if wgt != 0.0:
                importance[feat] = importance.get(feat, 0.0) + abs(wgt)
    importance = {f: float(np.sqrt(v)) for f, v in importance.items()}

    def coverage(chosen) -> float:
        seen = set()
        for k in chosen:
            seen.update(f for f, wgt in explanations[k].weights.items() if wgt != 0.0)
        return sum(importance[f] for f in seen)

    picked: list[int] = []
    for _ in range(min(budget, len(explanations))):
        best = None
        for k in range(len(explanations)):
            if k in picked:
                continue
            gain = coverage(picked + [k]) - coverage(picked)
            key = (-gain, explanations[k].instance_id, k)
            if best is None or key < best:
                best = key
                choice = k
        picked.append(choice)
    return GlobalSummary(picked=[explanations[k].instance_id for k in picked],
                         explanations=[explanations[k] for k in picked],
                         coverage=coverage(picked),
                         feature_importance=dict(sorted(importance.items())))
