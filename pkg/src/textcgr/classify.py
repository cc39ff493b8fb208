"""Per-image classifiers: logistic regression, linear SVM, and a
trig-transform + PCA nearest-neighbor scorer.

All three map a flattened image to a nonnegative score vector over class
labels that sums to one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.optimize
import scipy.sparse.linalg
from scipy.spatial import cKDTree

from .errors import ConfigError, DataError, NumericalError

MODEL_FORMAT_VERSION = 1
DISTANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class LabeledImage:
    """Flattened image intensities plus label and chunk provenance."""

    features: np.ndarray
    label: str
    doc_id: str = ""
    chunk_index: int = 0


@dataclass(frozen=True)
class ScoreVector:
    """Nonnegative per-class scores summing to one."""

    scores: np.ndarray
    class_ids: tuple

    def as_dict(self) -> dict:
        return {c: float(s) for c, s in zip(self.class_ids, self.scores)}

    def ranked(self) -> tuple:
        """Labels by descending score; ties keep class-id order."""
        order = np.argsort(-self.scores, kind="stable")
        return tuple(self.class_ids[i] for i in order)

    def top_label(self) -> str:
        return self.class_ids[int(np.argmax(self.scores))]


def _gather(data) -> tuple:
    if not data:
        raise DataError("no training images")
    class_ids = tuple(sorted({img.label for img in data}))
    if len(class_ids) < 2:
        raise DataError(f"need >= 2 classes, got {class_ids}")
    index = {c: i for i, c in enumerate(class_ids)}
    x = np.stack([np.asarray(img.features, dtype=np.float64) for img in data])
    y = np.array([index[img.label] for img in data], dtype=np.int64)
    return x, y, class_ids


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# logistic regression

@dataclass
class LrModel:
    weights: np.ndarray           # (num_classes, num_features)
    bias: np.ndarray              # (num_classes,)
    class_ids: tuple
    hyperparams: dict = field(default_factory=dict)
    loss_history: list = field(default_factory=list)
    table_hash: str | None = None
    order: int | None = None

    kind = "lr"


def lr_objective(params: np.ndarray, x: np.ndarray, y: np.ndarray,
                 num_classes: int, l2_strength: float) -> tuple:
    """Mean cross-entropy plus (l2/2N)*||W||^2 and its gradient.

    `params` packs the (C, d) weight matrix followed by the C biases; the
    bias entries are not penalized.
    """
    n, d = x.shape
    w = params[: num_classes * d].reshape(num_classes, d)
    b = params[num_classes * d :]
    z = x @ w.T + b
    z = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    loss = (log_norm - z[np.arange(n), y]).mean()
    loss += 0.5 * l2_strength / n * float((w * w).sum())

    p = np.exp(z - log_norm[:, None])
    p[np.arange(n), y] -= 1.0
    p /= n
    grad_w = p.T @ x + (l2_strength / n) * w
    grad_b = p.sum(axis=0)
    return loss, np.concatenate([grad_w.reshape(-1), grad_b])


def train_lr(data, l2_strength: float = 1.0, tol: float = 1e-6,
             max_iter: int = 500) -> LrModel:
    """Fit multinomial logistic regression with L-BFGS from zero weights."""
    x, y, class_ids = _gather(data)
    n, d = x.shape
    c = len(class_ids)
    x0 = np.zeros(c * (d + 1))
    history = []

    def track(params):
        history.append(float(lr_objective(params, x, y, c, l2_strength)[0]))

    track(x0)
    res = scipy.optimize.minimize(
        lr_objective, x0, args=(x, y, c, l2_strength),
        jac=True, method="L-BFGS-B", callback=track,
        options={"maxiter": max_iter, "gtol": tol, "ftol": 1e-12},
    )
    if not np.all(np.isfinite(res.x)):
        raise NumericalError(f"logistic regression diverged: {res.message}")
    w = res.x[: c * d].reshape(c, d)
    b = res.x[c * d :]
    return LrModel(weights=w, bias=b, class_ids=class_ids,
                   hyperparams={"l2_strength": l2_strength, "tol": tol,
                                "max_iter": max_iter},
                   loss_history=history)


def predict_lr(model: LrModel, features: np.ndarray) -> ScoreVector:
    """Softmax of the affine class scores."""
    f = np.asarray(features, dtype=np.float64)
    if f.shape != (model.weights.shape[1],):
        raise DataError(
            f"feature length {f.shape} does not match model "
            f"({model.weights.shape[1]},)")
    return ScoreVector(_softmax(model.weights @ f + model.bias),
                       model.class_ids)


# ---------------------------------------------------------------------------
# linear SVM (one-vs-rest, hinge + L2)

@dataclass
class SvmModel:
    weights: np.ndarray           # (num_classes, num_features)
    bias: np.ndarray              # (num_classes,)
    class_ids: tuple
    hyperparams: dict = field(default_factory=dict)
    table_hash: str | None = None
    order: int | None = None

    kind = "svm"


def _dual_cd(x_aug: np.ndarray, y: np.ndarray, c_reg: float, tol: float,
             max_passes: int) -> np.ndarray:
    """Dual coordinate descent for one hinge-loss binary problem.

    Deterministic fixed sweep order; returns the augmented weight vector.
    """
    n = x_aug.shape[0]
    q_diag = (x_aug * x_aug).sum(axis=1)
    alpha = np.zeros(n)
    w = np.zeros(x_aug.shape[1])
    for _ in range(max_passes):
        worst = 0.0
        for i in range(n):
            g = y[i] * (w @ x_aug[i]) - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= c_reg:
                pg = max(g, 0.0)
            else:
                pg = g
            worst = max(worst, abs(pg))
            if pg != 0.0:
                new_a = min(max(a - g / q_diag[i], 0.0), c_reg)
                if new_a != a:
                    w += (new_a - a) * y[i] * x_aug[i]
                    alpha[i] = new_a
        if worst < tol:
            break
    return w


def train_svm(data, c_reg: float = 1.0, tol: float = 1e-4,
              max_passes: int = 200) -> SvmModel:
    """One-vs-rest linear SVM; each binary problem solved in the dual."""
    x, y, class_ids = _gather(data)
    n, d = x.shape
    x_aug = np.hstack([x, np.ones((n, 1))])
    weights = np.zeros((len(class_ids), d))
    bias = np.zeros(len(class_ids))
    for ci in range(len(class_ids)):
        target = np.where(y == ci, 1.0, -1.0)
        w_aug = _dual_cd(x_aug, target, c_reg, tol, max_passes)
        weights[ci] = w_aug[:-1]
        bias[ci] = w_aug[-1]
    return SvmModel(weights=weights, bias=bias, class_ids=class_ids,
                    hyperparams={"c": c_reg, "tol": tol,
                                 "max_passes": max_passes})


def predict_svm(model: SvmModel, features: np.ndarray) -> ScoreVector:
    """Softmax over the per-class decision margins."""
    f = np.asarray(features, dtype=np.float64)
    if f.shape != (model.weights.shape[1],):
        raise DataError(
            f"feature length {f.shape} does not match model "
            f"({model.weights.shape[1]},)")
    margins = model.weights @ f + model.bias
    if not np.all(np.isfinite(margins)):
        raise NumericalError("non-finite SVM decision scores")
    return ScoreVector(_softmax(margins), model.class_ids)


# ---------------------------------------------------------------------------
# trig transform + PCA nearest neighbors

@lru_cache(maxsize=None)
def _basis(side: int, kind: str) -> np.ndarray:
    n = np.arange(side)
    if kind == "cosine":
        # orthonormal type-II cosine basis
        b = np.cos(np.pi * (2.0 * n[None, :] + 1.0) * n[:, None] / (2.0 * side))
        b *= np.sqrt(2.0 / side)
        b[0] /= np.sqrt(2.0)
    elif kind == "sine":
        # orthonormal type-I sine basis (symmetric, its own inverse)
        b = np.sin(np.pi * (n[None, :] + 1.0) * (n[:, None] + 1.0) / (side + 1.0))
        b *= np.sqrt(2.0 / (side + 1.0))
    else:
        raise ConfigError(f"transform kind must be 'sine' or 'cosine', got {kind!r}")
    return b


def trig_transform(image: np.ndarray, kind: str = "cosine") -> np.ndarray:
    """Separable 2-D orthonormal cosine (type II) or sine (type I) transform."""
    a = np.asarray(image, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataError(f"expected a square image, got shape {a.shape}")
    b = _basis(a.shape[0], kind)
    return b @ a @ b.T


def inverse_trig_transform(freq: np.ndarray, kind: str = "cosine") -> np.ndarray:
    a = np.asarray(freq, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataError(f"expected a square array, got shape {a.shape}")
    b = _basis(a.shape[0], kind)
    return b.T @ a @ b


def truncated_svd(x: np.ndarray, n: int) -> tuple:
    """Top-n singular triple (u, s, vt), singular values descending.

    Uses ARPACK with a fixed start vector when n < min(shape) (deterministic),
    dense LAPACK otherwise. Signs are canonicalized so each right singular
    vector's largest-magnitude entry is positive.
    """
    x = np.asarray(x, dtype=np.float64)
    if n < 1 or n > min(x.shape):
        raise ConfigError(f"n={n} out of range for matrix {x.shape}")
    if n < min(x.shape):
        try:
            u, s, vt = scipy.sparse.linalg.svds(
                x, k=n, v0=np.ones(min(x.shape)))
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise NumericalError(f"truncated SVD did not converge: {exc}")
        order = np.argsort(-s, kind="stable")
        u, s, vt = u[:, order], s[order], vt[order]
    else:
        u, s, vt = np.linalg.svd(x, full_matrices=False)
        u, s, vt = u[:, :n], s[:n], vt[:n]
    flips = np.sign(vt[np.arange(n), np.argmax(np.abs(vt), axis=1)])
    flips[flips == 0] = 1.0
    return u * flips, s, vt * flips[:, None]


@dataclass
class FttPcaModel:
    transform_kind: str
    freq_side: int
    n_components: int
    num_neighbors: int
    right_singular: np.ndarray    # (freq_side^2, n_components)
    singular_values: np.ndarray   # (n_components,)
    points: np.ndarray            # (num_images, n_components), rows of U*S
    point_labels: np.ndarray      # class index per point
    point_docs: tuple
    point_chunks: np.ndarray
    class_ids: tuple
    image_side: int
    table_hash: str | None = None
    order: int | None = None
    _tree: cKDTree | None = field(default=None, repr=False, compare=False)

    kind = "ftt_pca"

    def tree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(self.points)
        return self._tree


def _low_freq_block(image: np.ndarray, kind: str, f: int) -> np.ndarray:
    return trig_transform(image, kind)[:f, :f].reshape(-1)


def train_ftt_pca(data, freq_side: int = 100, n_components: int = 28,
                  kind: str = "cosine", num_neighbors: int = 12) -> FttPcaModel:
    """Index training images by their projected low-frequency content.

    Each image's transform is cropped to the lowest freq_side x freq_side
    block and flattened; a truncated SVD of the stacked block matrix gives
    the projection, and the scaled left singular vectors go into a kD tree.
    """
    if len(data) < 2:
        raise DataError(f"need >= 2 training images, got {len(data)}")
    class_ids = tuple(sorted({img.label for img in data}))
    index = {c: i for i, c in enumerate(class_ids)}
    side = int(round(np.sqrt(len(data[0].features))))
    if side * side != len(data[0].features):
        raise DataError("features do not form a square image")
    f = min(freq_side, side)
    if n_components > min(f * f, len(data)):
        raise ConfigError(
            f"n_components={n_components} exceeds min(f^2={f * f}, "
            f"images={len(data)})")
    x = np.stack([
        _low_freq_block(np.asarray(img.features, dtype=np.float64)
                        .reshape(side, side), kind, f)
        for img in data
    ])
    u, s, vt = truncated_svd(x, n_components)
    return FttPcaModel(
        transform_kind=kind,
        freq_side=f,
        n_components=n_components,
        num_neighbors=num_neighbors,
        right_singular=vt.T.copy(),
        singular_values=s,
        points=u * s,
        point_labels=np.array([index[img.label] for img in data], dtype=np.int64),
        point_docs=tuple(img.doc_id for img in data),
        point_chunks=np.array([img.chunk_index for img in data], dtype=np.int64),
        class_ids=class_ids,
        image_side=side,
    )


def signature(model: FttPcaModel, features: np.ndarray) -> np.ndarray:
    """Project a flattened image to its n-dimensional fingerprint vector."""
    f = np.asarray(features, dtype=np.float64)
    expected = model.image_side * model.image_side
    if f.shape != (expected,):
        raise DataError(f"feature length {f.shape} does not match model "
                        f"({expected},)")
    block = _low_freq_block(f.reshape(model.image_side, model.image_side),
                            model.transform_kind, model.freq_side)
    return block @ model.right_singular


def predict_ftt_pca(model: FttPcaModel, features: np.ndarray,
                    num_neighbors: int | None = None) -> ScoreVector:
    """Inverse-distance-weighted vote of the nearest indexed images."""
    q = signature(model, features)
    m = num_neighbors if num_neighbors is not None else model.num_neighbors
    m = min(m, len(model.points))
    dist, idx = model.tree().query(q, k=m)
    dist = np.atleast_1d(np.asarray(dist, dtype=np.float64))
    idx = np.atleast_1d(idx)
    w = 1.0 / np.maximum(dist, DISTANCE_FLOOR)
    w /= w.sum()
    scores = np.zeros(len(model.class_ids))
    np.add.at(scores, model.point_labels[idx], w)
    return ScoreVector(scores, model.class_ids)


@dataclass(frozen=True)
class Neighbor:
    doc_id: str
    chunk_index: int
    label: str
    distance: float


def nearest_chunks(model: FttPcaModel, query_point: np.ndarray, m: int,
                   exclude: tuple | None = None) -> list:
    """The m nearest indexed chunks, optionally skipping one exact identity.

    `exclude` is a (doc_id, chunk_index) pair; useful when the query is
    itself one of the indexed images.
    """
    total = len(model.points)
    if m >= total:
        raise ConfigError(f"m={m} must be smaller than the index ({total} points)")
    ask = min(m + (1 if exclude is not None else 0), total)
    dist, idx = model.tree().query(np.asarray(query_point, dtype=np.float64),
                                   k=ask)
    out = []
    for d, i in zip(np.atleast_1d(dist), np.atleast_1d(idx)):
        ident = (model.point_docs[i], int(model.point_chunks[i]))
        if exclude is not None and ident == tuple(exclude):
            continue
        out.append(Neighbor(ident[0], ident[1],
                            model.class_ids[model.point_labels[i]], float(d)))
        if len(out) == m:
            break
    return out


# ---------------------------------------------------------------------------
# persistence

def _meta(model) -> dict:
    meta = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "class_ids": list(model.class_ids),
        "table_hash": model.table_hash,
        "order": model.order,
    }
    if model.kind in ("lr", "svm"):
        meta["hyperparams"] = model.hyperparams
    else:
        meta.update(transform_kind=model.transform_kind,
                    freq_side=model.freq_side,
                    n_components=model.n_components,
                    num_neighbors=model.num_neighbors,
                    image_side=model.image_side,
                    point_docs=list(model.point_docs))
    return meta


def save_model(model, path) -> None:
    """Write a model as a versioned npz container (all floats little-endian)."""
    arrays = {}
    if model.kind in ("lr", "svm"):
        arrays["weights"] = model.weights.astype("<f8")
        arrays["bias"] = model.bias.astype("<f8")
    elif model.kind == "ftt_pca":
        arrays["right_singular"] = model.right_singular.astype("<f8")
        arrays["singular_values"] = model.singular_values.astype("<f8")
        arrays["points"] = model.points.astype("<f8")
        arrays["point_labels"] = model.point_labels.astype("<i8")
        arrays["point_chunks"] = model.point_chunks.astype("<i8")
    else:
        raise ConfigError(f"unknown model kind {model.kind!r}")
    meta = json.dumps(_meta(model), sort_keys=True)
    np.savez(path, meta=np.array(meta), **arrays)


def load_model(path, expected_table_hash: str | None = None):
    """Load a saved model; a mismatched equivalence-table hash is an error."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("format_version") != MODEL_FORMAT_VERSION:
            raise DataError(
                f"{path}: unsupported model format {meta.get('format_version')}")
        if (expected_table_hash is not None and meta["table_hash"] is not None
                and meta["table_hash"] != expected_table_hash):
            raise DataError(
                f"{path}: model was trained with a different equivalence table")
        kind = meta["kind"]
        class_ids = tuple(meta["class_ids"])
        if kind == "lr":
            return LrModel(weights=data["weights"], bias=data["bias"],
                           class_ids=class_ids,
                           hyperparams=meta.get("hyperparams", {}),
                           table_hash=meta["table_hash"], order=meta["order"])
        if kind == "svm":
            return SvmModel(weights=data["weights"], bias=data["bias"],
                            class_ids=class_ids,
                            hyperparams=meta.get("hyperparams", {}),
                            table_hash=meta["table_hash"], order=meta["order"])
        if kind == "ftt_pca":
            return FttPcaModel(
                transform_kind=meta["transform_kind"],
                freq_side=meta["freq_side"],
                n_components=meta["n_components"],
                num_neighbors=meta["num_neighbors"],
                right_singular=data["right_singular"],
                singular_values=data["singular_values"],
                points=data["points"],
                point_labels=data["point_labels"],
                point_docs=tuple(meta["point_docs"]),
                point_chunks=data["point_chunks"],
                class_ids=class_ids,
                image_side=meta["image_side"],
                table_hash=meta["table_hash"], order=meta["order"])
        raise DataError(f"{path}: unknown model kind {kind!r}")


def predict(model, features: np.ndarray) -> ScoreVector:
    """Dispatch prediction on the model kind."""
    if model.kind == "lr":
        return predict_lr(model, features)
    if model.kind == "svm":
        return predict_svm(model, features)
    return predict_ftt_pca(model, features)
