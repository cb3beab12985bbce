"""Learning the 20 frequency-band sensitivity weights from human scores.

The weighted distance is linear in the knot values, so each mesh pair is
reduced once to a 20-vector of knot contributions and every optimization
step is cheap reweighting. The loss combines a Pearson correlation term,
a differentiable Spearman term built on pairwise-logistic soft ranks,
and a pull-to-one regularizer; it is minimized by gradient descent with
a backtracking line search. Evaluation follows a leave-one-object-out
k-fold protocol.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from ._parallel import thread_map
from .evaluation import AnnotationSet, average_ranks, krocc, mos_table, plcc, srocc
from .mesh import Mesh, load_mesh
from .metric import (
    MetricOptions,
    N_WEIGHT_KNOTS,
    SpectrumWeights,
    compute_spectrum,
    spectrum_weight_basis,
)

__all__ = [
    "TrainConfig",
    "FoldResult",
    "ObjectMeshes",
    "soft_rank",
    "soft_rank_jacobian",
    "composite_loss",
    "TrainingData",
    "build_training_data",
    "train_weights",
    "train_weights_from_data",
    "kfold_evaluate",
    "write_fold_report_csv",
    "load_mesh_tree",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Loss weights and optimizer knobs.

    The three loss weights default to 0.1 (Pearson term), 10 (soft
    Spearman term), and 1 (regularizer). ``learning_rate`` is the initial
    trial step of the backtracking line search; ``temperature`` applies
    to soft ranks of standardized distances, so it is scale-free.
    """

    lambda_plcc: float = 0.1
    lambda_srocc: float = 10.0
    lambda_regu: float = 1.0
    learning_rate: float = 0.1
    iterations: int = 300
    temperature: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if min(self.lambda_plcc, self.lambda_srocc, self.lambda_regu) < 0:
            raise ValueError("loss weights must be non-negative")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.temperature <= 0:
            raise ValueError("soft-rank temperature must be positive")


@dataclass(frozen=True)
class FoldResult:
    fold: int
    object_id: str
    weights: SpectrumWeights
    plcc: float
    srocc: float
    krocc: float


@dataclass(frozen=True)
class ObjectMeshes:
    """One benchmark object: its reference mesh and the distorted copies
    keyed by distortion id."""

    ground_truth: Mesh
    distorted: dict


# ---------------------------------------------------------------------------
# Soft ranking


def soft_rank(values, temperature: float) -> np.ndarray:
    """Differentiable surrogate for 1-based ranks:
    r_i = 1 + sum_j sigmoid((x_i - x_j) / T).

    As T -> 0 this converges to hard ranks with ties averaged; a constant
    vector maps to (n + 1) / 2 everywhere.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    x = np.asarray(values, dtype=np.float64)
    z = expit((x[:, None] - x[None, :]) / temperature)
    np.fill_diagonal(z, 0.0)
    return 1.0 + z.sum(axis=1)


def soft_rank_jacobian(values, temperature: float) -> np.ndarray:
    """J[i, j] = d soft_rank_i / d x_j."""
    x = np.asarray(values, dtype=np.float64)
    sig = expit((x[:, None] - x[None, :]) / temperature)
    dsig = sig * (1.0 - sig) / temperature
    np.fill_diagonal(dsig, 0.0)
    jac = -dsig
    np.fill_diagonal(jac, dsig.sum(axis=1))
    return jac


# ---------------------------------------------------------------------------
# Loss


def _plcc_with_grad(d, h):
    """Pearson correlation of (d, h) and its gradient w.r.t. d."""
    dc = d - d.mean()
    hc = h - h.mean()
    b2 = (dc * dc).sum()
    c2 = (hc * hc).sum()
    if b2 == 0.0 or c2 == 0.0:
        raise ValueError("correlation undefined for zero-variance input")
    a = (dc * hc).sum()
    denom = np.sqrt(b2 * c2)
    r = a / denom
    grad = hc / denom - (a / (b2 * denom)) * dc
    return r, grad


def _soft_srocc_with_grad(d, h, temperature):
    """Spearman coefficient with soft ranks on standardized d, hard
    average ranks on h, and its gradient w.r.t. d."""
    n = len(d)
    s = d.std(ddof=1)
    if s == 0.0:
        raise ValueError("correlation undefined for zero-variance input")
    y = (d - d.mean()) / s
    ranks_d = soft_rank(y, temperature)
    ranks_h = average_ranks(h)
    scale = 6.0 / (n * (n * n - 1))
    diff = ranks_d - ranks_h
    r = 1.0 - scale * (diff * diff).sum()
    grad_ranks = -2.0 * scale * diff
    grad_y = soft_rank_jacobian(y, temperature).T @ grad_ranks
    grad_d = (grad_y - grad_y.mean() - y * (y @ grad_y) / (n - 1)) / s
    return r, grad_d


def composite_loss(basis, scores, weights, config: TrainConfig):
    """Loss and analytic gradient w.r.t. the 20 knot weights for one
    batch of mesh pairs.

    ``basis`` is (n, 20) with row p the knot-contribution vector of pair
    p, so distances are d = basis @ w. The correlation terms are
    1 + PLCC(d, scores) and 1 + softSROCC(d, scores): minimizing drives
    both correlations toward -1, the right direction for a distance
    against quality scores. The regularizer mean((w - 1)^2) pulls knots
    to 1.
    """
    basis = np.asarray(basis, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    w = weights.values if isinstance(weights, SpectrumWeights) else np.asarray(weights, float)
    if basis.ndim != 2 or basis.shape[1] != N_WEIGHT_KNOTS:
        raise ValueError(f"basis must be (n, {N_WEIGHT_KNOTS})")
    if len(scores) != len(basis) or len(scores) < 3:
        raise ValueError("need at least 3 scored pairs")
    d = basis @ w

    loss = 0.0
    grad_d = np.zeros(len(d))
    if config.lambda_plcc > 0:
        r_p, g_p = _plcc_with_grad(d, scores)
        loss += config.lambda_plcc * (1.0 + r_p)
        grad_d += config.lambda_plcc * g_p
    if config.lambda_srocc > 0:
        r_s, g_s = _soft_srocc_with_grad(d, scores, config.temperature)
        loss += config.lambda_srocc * (1.0 + r_s)
        grad_d += config.lambda_srocc * g_s
    grad_w = basis.T @ grad_d
    loss += config.lambda_regu * float(((w - 1.0) ** 2).mean())
    grad_w += config.lambda_regu * 2.0 * (w - 1.0) / N_WEIGHT_KNOTS
    return float(loss), grad_w


# ---------------------------------------------------------------------------
# Training data plumbing


@dataclass(frozen=True)
class TrainingData:
    """Per-object knot-basis matrices and mean opinion scores, ready for
    reweighting-based optimization."""

    object_ids: tuple
    bases: dict        # object id -> (n_distortions, 20)
    scores: dict       # object id -> (n_distortions,)
    distortions: dict  # object id -> tuple of distortion ids

    def subset(self, object_ids) -> "TrainingData":
        ids = tuple(object_ids)
        return TrainingData(
            object_ids=ids,
            bases={o: self.bases[o] for o in ids},
            scores={o: self.scores[o] for o in ids},
            distortions={o: self.distortions[o] for o in ids},
        )


def build_training_data(
    annotations: AnnotationSet,
    meshes: dict,
    options: MetricOptions | None = None,
) -> TrainingData:
    """Reduce every (ground truth, distorted) pair to its 20-vector of
    knot contributions and aggregate annotations to mean opinion scores.

    ``meshes`` maps object id to ObjectMeshes covering every annotated
    distortion.
    """
    options = options or MetricOptions()
    mos = mos_table(annotations)
    object_ids = annotations.objects()
    for obj in object_ids:
        if obj not in meshes:
            raise ValueError(f"no meshes supplied for object {obj!r}")
    pairs = []
    for obj in object_ids:
        for dist in annotations.distortions(obj):
            if dist not in meshes[obj].distorted:
                raise ValueError(f"missing distorted mesh for ({obj!r}, {dist!r})")
            pairs.append((obj, dist))

    gt_specs = dict(
        zip(
            object_ids,
            thread_map(
                lambda o: compute_spectrum(meshes[o].ground_truth, options), object_ids
            ),
        )
    )

    def pair_basis(pair):
        obj, dist = pair
        spec = compute_spectrum(meshes[obj].distorted[dist], options)
        return spectrum_weight_basis(spec, gt_specs[obj], options.energy_difference)

    basis_rows = dict(zip(pairs, thread_map(pair_basis, pairs)))
    bases, scores, distortions = {}, {}, {}
    for obj in object_ids:
        ids = tuple(annotations.distortions(obj))
        bases[obj] = np.vstack([basis_rows[(obj, d)] for d in ids])
        scores[obj] = np.array([mos[(obj, d)] for d in ids])
        distortions[obj] = ids
    return TrainingData(
        object_ids=tuple(object_ids), bases=bases, scores=scores, distortions=distortions
    )


def load_mesh_tree(root, annotations: AnnotationSet, triangulate: bool = False) -> dict:
    """Load meshes from the directory convention
    root/<object>/gt.(obj|ply) and root/<object>/<distortion>.(obj|ply)
    for every annotated (object, distortion)."""
    root = Path(root)

    def find(directory, stem):
        for ext in (".obj", ".ply"):
            p = directory / (stem + ext)
            if p.exists():
                return p
        raise FileNotFoundError(f"no mesh file {directory / stem}.obj or .ply")

    meshes = {}
    for obj in annotations.objects():
        obj_dir = root / obj
        if not obj_dir.is_dir():
            raise FileNotFoundError(f"no mesh directory for object {obj!r}: {obj_dir}")
        gt = load_mesh(find(obj_dir, "gt"), triangulate=triangulate)
        distorted = {
            dist: load_mesh(find(obj_dir, dist), triangulate=triangulate)
            for dist in annotations.distortions(obj)
        }
        meshes[obj] = ObjectMeshes(ground_truth=gt, distorted=distorted)
    return meshes


# ---------------------------------------------------------------------------
# Optimization


def _total_loss(data: TrainingData, w, config: TrainConfig, with_grad: bool = True):
    """Correlation losses averaged over objects plus one regularizer."""
    reg_only = TrainConfig(
        lambda_plcc=config.lambda_plcc,
        lambda_srocc=config.lambda_srocc,
        lambda_regu=0.0,
        learning_rate=config.learning_rate,
        iterations=config.iterations,
        temperature=config.temperature,
        seed=config.seed,
    )
    total = 0.0
    grad = np.zeros(N_WEIGHT_KNOTS)
    for obj in data.object_ids:
        loss_o, grad_o = composite_loss(data.bases[obj], data.scores[obj], w, reg_only)
        total += loss_o
        grad += grad_o
    n_obj = len(data.object_ids)
    total /= n_obj
    grad /= n_obj
    total += config.lambda_regu * float(((w - 1.0) ** 2).mean())
    grad += config.lambda_regu * 2.0 * (w - 1.0) / N_WEIGHT_KNOTS
    return (total, grad) if with_grad else total


def train_weights_from_data(data: TrainingData, config: TrainConfig | None = None):
    """Gradient descent with backtracking line search from all-ones.

    Accepts only descent steps, so the loss is non-increasing; stops
    early when no step of the line search improves it. Returns the
    trained weights with negative knots clamped to zero, plus the loss
    trace.
    """
    config = config or TrainConfig()
    if not data.object_ids:
        raise ValueError("training set has no objects")
    for obj in data.object_ids:
        if len(data.scores[obj]) < 3:
            raise ValueError(f"object {obj!r} has fewer than 3 scored distortions")
    w = np.ones(N_WEIGHT_KNOTS)
    loss, grad = _total_loss(data, w, config)
    trace = [loss]
    step = config.learning_rate
    for _ in range(config.iterations):
        gnorm2 = float(grad @ grad)
        if gnorm2 <= 1e-18:
            break
        t = step
        accepted = False
        for _ in range(40):
            w_try = w - t * grad
            loss_try = _total_loss(data, w_try, config, with_grad=False)
            if loss_try <= loss - 1e-4 * t * gnorm2:
                accepted = True
                break
            t /= 2.0
        if not accepted:
            break
        w = w_try
        loss, grad = _total_loss(data, w, config)
        trace.append(loss)
        step = min(t * 2.0, 100.0 * config.learning_rate)
    clamped = np.maximum(w, 0.0)
    n_clamped = int(np.count_nonzero(clamped != w))
    if n_clamped:
        logger.info("clamped %d negative weight knots to zero", n_clamped)
    return SpectrumWeights(clamped), trace


def train_weights(
    annotations: AnnotationSet,
    meshes: dict,
    config: TrainConfig | None = None,
    options: MetricOptions | None = None,
) -> SpectrumWeights:
    """End-to-end training entry point over annotations and meshes."""
    data = build_training_data(annotations, meshes, options)
    weights, _ = train_weights_from_data(data, config)
    return weights


def _test_correlations(data: TrainingData, obj, weights: SpectrumWeights):
    d = data.bases[obj] @ weights.values
    h = data.scores[obj]
    return plcc(-d, h), srocc(-d, h), krocc(-d, h)


def kfold_evaluate(
    annotations: AnnotationSet | None = None,
    meshes: dict | None = None,
    config: TrainConfig | None = None,
    k: int | None = None,
    options: MetricOptions | None = None,
    data: TrainingData | None = None,
):
    """Leave-one-object-out protocol: for each fold, train on all other
    objects and correlate the held-out object's (negated) distances with
    its mean opinion scores. Returns the fold results and the
    fold-averaged weight profile.

    Pass either prepared ``data`` or (annotations, meshes) to build it.
    """
    if data is None:
        if annotations is None or meshes is None:
            raise ValueError("kfold_evaluate needs either data or annotations+meshes")
        data = build_training_data(annotations, meshes, options)
    objects = list(data.object_ids)
    if len(objects) < 2:
        raise ValueError("leave-one-object-out needs at least 2 objects")
    if k is None:
        k = len(objects)
    if k != len(objects):
        raise ValueError(
            f"k must equal the number of distinct objects ({len(objects)}), got {k}"
        )
    results = []
    for fold, held_out in enumerate(objects):
        train_ids = [o for o in objects if o != held_out]
        weights, _ = train_weights_from_data(data.subset(train_ids), config)
        p, s, t = _test_correlations(data, held_out, weights)
        results.append(
            FoldResult(fold=fold, object_id=held_out, weights=weights,
                       plcc=p, srocc=s, krocc=t)
        )
    averaged = SpectrumWeights(
        np.mean([r.weights.values for r in results], axis=0)
    )
    return results, averaged


def write_fold_report_csv(results, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fold", "object", "plcc", "srocc", "krocc"])
        for r in results:
            writer.writerow(
                [r.fold, r.object_id, f"{r.plcc:.6f}", f"{r.srocc:.6f}", f"{r.krocc:.6f}"]
            )
