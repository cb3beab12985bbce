import numpy as np
import pytest

from saucd.distortions import impulse_noise, taubin_smooth, white_noise
from saucd.evaluation import AnnotationRecord, AnnotationSet, srocc
from saucd.metric import (
    MetricOptions,
    SpectrumWeights,
    compute_spectrum,
    spectrum_weight_basis,
)
from saucd.shapes import bumpy_sphere
from saucd.training import (
    ObjectMeshes,
    TrainConfig,
    TrainingData,
    build_training_data,
    composite_loss,
    kfold_evaluate,
    soft_rank,
    soft_rank_jacobian,
    train_weights,
    train_weights_from_data,
    write_fold_report_csv,
)


def fd_gradient(fn, x, eps=1e-6):
    """Central finite differences (independent gradient oracle)."""
    g = np.zeros_like(x)
    for k in range(len(x)):
        hi = x.copy()
        lo = x.copy()
        hi[k] += eps
        lo[k] -= eps
        g[k] = (fn(hi) - fn(lo)) / (2 * eps)
    return g


def synthetic_distortions(mesh, seed):
    """Twelve cheap distortions with graded severity."""
    out = {}
    for lvl, sigma in enumerate((0.1, 0.25, 0.4, 0.6), start=1):
        out[f"wn{lvl}"] = white_noise(mesh, sigma, seed=seed * 31 + lvl)
    for lvl, iters in enumerate((3, 10, 25, 60), start=1):
        out[f"sm{lvl}"] = taubin_smooth(mesh, iters)
    for lvl, (r, s) in enumerate(((2, 1), (5, 2), (8, 3), (12, 4)), start=1):
        out[f"imp{lvl}"] = impulse_noise(mesh, r, s, seed=seed * 57 + lvl)
    return out


def synthetic_training_data(n_objects, hidden, seed=0, noise_frac=0.05):
    """Scores generated as -(weighted distance under hidden knots) plus
    Gaussian noise sized to the score range."""
    rng = np.random.default_rng(seed)
    bases, scores, distortions = {}, {}, {}
    ids = []
    for k in range(n_objects):
        obj = f"obj{k}"
        ids.append(obj)
        base_mesh = bumpy_sphere(1, amplitude=0.08 + 0.03 * (k % 4), seed=900 + k)
        gt_spec = compute_spectrum(base_mesh)
        names, rows = [], []
        for name, mesh in synthetic_distortions(base_mesh, seed=k).items():
            names.append(name)
            rows.append(spectrum_weight_basis(compute_spectrum(mesh), gt_spec))
        bases[obj] = np.vstack(rows)
        raw = -(bases[obj] @ hidden.values)
        spread = raw.max() - raw.min()
        scores[obj] = raw + rng.normal(0.0, noise_frac * spread, len(raw))
        distortions[obj] = tuple(names)
    return TrainingData(
        object_ids=tuple(ids), bases=bases, scores=scores, distortions=distortions
    )


HIDDEN = SpectrumWeights(0.5 + 1.5 * np.exp(-(((np.linspace(0, 0.05, 20) - 0.02) / 0.012) ** 2)))


class TestSoftRank:
    def test_hard_rank_limit(self):
        ranks = soft_rank([3.0, 1.0, 2.0], temperature=1e-6)
        assert np.allclose(ranks, [3.0, 1.0, 2.0], atol=1e-9)

    def test_constant_vector_ties(self):
        n = 7
        ranks = soft_rank(np.full(n, 2.5), temperature=0.3)
        assert np.allclose(ranks, (n + 1) / 2)

    def test_ordering_matches_sort_tie_free(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.standard_normal(15)
            ranks = soft_rank(x, temperature=1e-6)
            assert np.array_equal(np.argsort(ranks), np.argsort(x))

    def test_jacobian_against_finite_differences(self):
        rng = np.random.default_rng(1)
        for temperature in (0.1, 0.5, 1.0):
            x = rng.standard_normal(10)
            jac = soft_rank_jacobian(x, temperature)
            for i in range(10):
                fd = fd_gradient(lambda v: soft_rank(v, temperature)[i], x)
                assert np.abs(jac[i] - fd).max() <= 1e-5

    def test_smooth_at_positive_temperature(self):
        x = np.array([1.0, 1.0 + 1e-9, 2.0])
        ranks = soft_rank(x, temperature=0.5)
        assert np.all(np.isfinite(ranks))

    def test_temperature_validation(self):
        with pytest.raises(ValueError):
            soft_rank([1.0, 2.0], temperature=0.0)


class TestCompositeLoss:
    def _batch(self, seed=0, n=12):
        rng = np.random.default_rng(seed)
        basis = rng.uniform(0.0, 0.5, (n, 20))
        scores = rng.uniform(0.0, 6.0, n)
        return basis, scores

    def test_regularizer_only_at_ones(self):
        basis, scores = self._batch()
        config = TrainConfig(lambda_plcc=0.0, lambda_srocc=0.0)
        loss, grad = composite_loss(basis, scores, SpectrumWeights.uniform(1.0), config)
        assert loss == 0.0
        assert np.allclose(grad, 0.0)

    def test_perfect_anticorrelation_plcc_zero(self):
        basis, _ = self._batch()
        config = TrainConfig(lambda_plcc=1.0, lambda_srocc=0.0, lambda_regu=0.0)
        for wval in (1.0, 0.5, 2.0):
            w = SpectrumWeights.uniform(wval)
            scores = -(basis @ w.values)
            loss, _ = composite_loss(basis, scores, w, config)
            assert loss == pytest.approx(0.0, abs=1e-12)

    def test_gradient_against_finite_differences(self):
        config = TrainConfig(temperature=0.2)
        for seed in range(5):
            basis, scores = self._batch(seed)
            rng = np.random.default_rng(seed + 100)
            w0 = rng.uniform(0.5, 1.5, 20)
            _, grad = composite_loss(basis, scores, SpectrumWeights(w0), config)
            fd = fd_gradient(
                lambda w: composite_loss(basis, scores, SpectrumWeights(w), config)[0],
                w0,
            )
            assert np.abs(grad - fd).max() <= 1e-4

    def test_zero_variance_distances_error(self):
        basis = np.zeros((5, 20))
        scores = np.arange(5.0)
        with pytest.raises(ValueError, match="zero-variance"):
            composite_loss(basis, scores, SpectrumWeights.uniform(1.0), TrainConfig())

    def test_zero_variance_scores_error(self):
        basis, _ = self._batch()
        scores = np.full(len(basis), 3.0)
        with pytest.raises(ValueError, match="zero-variance"):
            composite_loss(basis, scores, SpectrumWeights.uniform(1.0), TrainConfig())

    def test_too_few_pairs(self):
        with pytest.raises(ValueError, match="at least 3"):
            composite_loss(np.ones((2, 20)), [1.0, 2.0],
                           SpectrumWeights.uniform(1.0), TrainConfig())


class TestTrainWeights:
    def test_regularizer_only_returns_ones(self):
        data = synthetic_training_data(2, HIDDEN, seed=1)
        config = TrainConfig(lambda_plcc=0.0, lambda_srocc=0.0)
        weights, trace = train_weights_from_data(data, config)
        assert np.allclose(weights.values, 1.0)
        assert len(trace) == 1  # zero gradient at the start

    def test_loss_non_increasing(self):
        data = synthetic_training_data(3, HIDDEN, seed=2)
        _, trace = train_weights_from_data(data, TrainConfig(iterations=60))
        assert all(a >= b - 1e-12 for a, b in zip(trace, trace[1:]))
        assert trace[-1] <= trace[0]

    def test_large_regularizer_pins_to_ones(self):
        data = synthetic_training_data(2, HIDDEN, seed=3)
        config = TrainConfig(lambda_regu=1e4, iterations=200)
        weights, _ = train_weights_from_data(data, config)
        assert np.abs(weights.values - 1.0).max() <= 0.01

    def test_weights_clamped_non_negative(self):
        data = synthetic_training_data(2, HIDDEN, seed=4)
        weights, _ = train_weights_from_data(data, TrainConfig(iterations=100))
        assert (weights.values >= 0.0).all()

    def test_recovery_small(self):
        # 4 objects suffice to check the pipeline learns signal
        data = synthetic_training_data(4, HIDDEN, seed=5)
        results, _ = kfold_evaluate(config=TrainConfig(iterations=120), data=data)
        held_out = np.mean([r.srocc for r in results])
        assert held_out >= 0.85


class TestKfold:
    def test_two_objects_two_folds(self):
        data = synthetic_training_data(2, HIDDEN, seed=6)
        results, averaged = kfold_evaluate(config=TrainConfig(iterations=40), data=data)
        assert len(results) == 2
        assert {r.object_id for r in results} == set(data.object_ids)
        # each fold trained without its test object: fold weights differ
        # from each other only through the training subsets
        assert averaged.values.shape == (20,)

    def test_identical_objects_near_identical_weights(self):
        base = synthetic_training_data(1, HIDDEN, seed=7)
        obj = base.object_ids[0]
        data = TrainingData(
            object_ids=("a", "b", "c"),
            bases={o: base.bases[obj] for o in ("a", "b", "c")},
            scores={o: base.scores[obj] for o in ("a", "b", "c")},
            distortions={o: base.distortions[obj] for o in ("a", "b", "c")},
        )
        results, _ = kfold_evaluate(config=TrainConfig(iterations=60), data=data)
        stacked = np.array([r.weights.values for r in results])
        spread = stacked.max(axis=0) - stacked.min(axis=0)
        weight_range = stacked.max() - stacked.min() + 1e-12
        assert spread.max() <= 1e-9 * max(weight_range, 1.0)

    def test_correlations_in_range(self):
        data = synthetic_training_data(3, HIDDEN, seed=8, noise_frac=0.3)
        results, _ = kfold_evaluate(config=TrainConfig(iterations=30), data=data)
        for r in results:
            assert -1.0 <= r.plcc <= 1.0
            assert -1.0 <= r.srocc <= 1.0
            assert -1.0 <= r.krocc <= 1.0

    def test_k_must_match_object_count(self):
        data = synthetic_training_data(3, HIDDEN, seed=9)
        with pytest.raises(ValueError, match="k must equal"):
            kfold_evaluate(k=5, data=data)

    def test_report_csv(self, tmp_path):
        data = synthetic_training_data(2, HIDDEN, seed=10)
        results, _ = kfold_evaluate(config=TrainConfig(iterations=20), data=data)
        path = tmp_path / "folds.csv"
        write_fold_report_csv(results, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "fold,object,plcc,srocc,krocc"
        assert len(lines) == 3


class TestAnnotationPipeline:
    def test_build_training_data_from_annotations(self):
        mesh = bumpy_sphere(1, seed=20)
        distorted = synthetic_distortions(mesh, seed=0)
        names = list(distorted)[:4]
        meshes = {
            "obj": ObjectMeshes(
                ground_truth=mesh, distorted={n: distorted[n] for n in names}
            )
        }
        records = []
        for subj in range(3):
            for k, name in enumerate(names):
                records.append(
                    AnnotationRecord("obj", name, "m0", f"s{subj}", (k + subj) % 7)
                )
        ann = AnnotationSet(records)
        data = build_training_data(ann, meshes)
        assert data.bases["obj"].shape == (4, 20)
        assert len(data.scores["obj"]) == 4

    def test_missing_mesh_error(self):
        ann = AnnotationSet(
            [AnnotationRecord("obj", "d0", "m0", "s0", 3)]
        )
        with pytest.raises(ValueError, match="no meshes"):
            build_training_data(ann, {})

    def test_reweighting_linearity_through_training_path(self):
        data = synthetic_training_data(1, HIDDEN, seed=11)
        obj = data.object_ids[0]
        rng = np.random.default_rng(12)
        mesh = bumpy_sphere(1, amplitude=0.08, seed=900)
        gt = compute_spectrum(mesh)
        sample = synthetic_distortions(mesh, seed=0)
        from saucd.metric import spectrum_weighted_saucd

        name = data.distortions[obj][0]
        spec = compute_spectrum(sample[name])
        for _ in range(5):
            w = SpectrumWeights(rng.uniform(0, 2, 20))
            direct = spectrum_weighted_saucd(spec, gt, w)
            via_basis = float(data.bases[obj][0] @ w.values)
            assert abs(direct - via_basis) <= 1e-10
