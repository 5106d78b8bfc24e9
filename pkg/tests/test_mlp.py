"""Classifier: standardizer, training, inference, and the gradient oracle."""

import numpy as np
import pytest

from promptgate.errors import ContractViolation, IntegrityError, TrainingError
from promptgate.fixtures import make_gaussian_clusters
from promptgate.mlp import (
    LabelCodec,
    MlpModel,
    Standardizer,
    TrainConfig,
    fit_standardizer,
    gradient_check,
    train_mlp,
)
from promptgate.mlp.train import holdout_accuracy
from promptgate.types import CANONICAL_TEMPLATES, TemplateId

FULL_CODEC = LabelCodec(tuple(CANONICAL_TEMPLATES))


def small_model(seed=3, dim=16, hidden=8, k=5, l2_alpha=0.01):
    rng = np.random.default_rng(seed)
    return MlpModel(
        weights=(
            rng.uniform(-0.6, 0.6, (dim, hidden)),
            rng.uniform(-0.5, 0.5, (hidden, k)),
        ),
        biases=(rng.uniform(-0.1, 0.1, hidden), rng.uniform(-0.1, 0.1, k)),
        l2_alpha=l2_alpha,
        codec=FULL_CODEC,
        standardizer=Standardizer(mean=np.zeros(dim), std=np.ones(dim)),
    )


@pytest.fixture(scope="module")
def cluster_data():
    X, labels = make_gaussian_clusters(2000, seed=7)
    return X, labels


@pytest.fixture(scope="module")
def trained(cluster_data):
    X, labels = cluster_data
    y = np.array([l.canonical_index for l in labels])
    rng = np.random.default_rng(99)
    train_idx, test_idx = [], []
    for c in range(5):
        members = np.flatnonzero(y == c)
        members = members[rng.permutation(members.size)]
        cut = int(0.8 * members.size)
        train_idx.extend(members[:cut])
        test_idx.extend(members[cut:])
    train_idx, test_idx = np.array(train_idx), np.array(test_idx)
    model, report = train_mlp(
        X[train_idx],
        [labels[i] for i in train_idx],
        TrainConfig(seed=42, batch_size=128),
    )
    return model, report, X, labels, train_idx, test_idx


class TestStandardizer:
    def test_hand_computed_two_rows(self):
        X = np.array([[0.0] * 4, [2.0] * 4])
        st = fit_standardizer(X)
        assert np.allclose(st.mean, 1.0)
        assert np.allclose(st.std, 1.0)

    def test_constant_column_transforms_to_zero(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((50, 6))
        X[:, 2] = 3.14
        st = fit_standardizer(X)
        out = st.transform(X)
        assert np.all(out[:, 2] == 0.0)
        assert np.all(np.isfinite(out))

    def test_transform_centers_and_scales(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((400, 8)) * 5.0 + 2.0
        st = fit_standardizer(X)
        out = st.transform(X)
        assert np.abs(out.mean(axis=0)).max() < 1e-9
        assert np.abs(out.std(axis=0) - 1.0).max() < 1e-6

    def test_needs_two_samples(self):
        with pytest.raises(TrainingError):
            fit_standardizer(np.ones((1, 4)))


class TestLabelCodec:
    def test_canonical_ordering(self):
        labels = [TemplateId("verbose"), TemplateId("minimal"), TemplateId("standard")]
        codec = LabelCodec.from_labels(labels)
        assert [t.name for t in codec.labels] == ["minimal", "standard", "verbose"]

    def test_bijective(self):
        codec = LabelCodec.from_labels(list(CANONICAL_TEMPLATES))
        for i, label in enumerate(codec.labels):
            assert codec.encode(label) == i
            assert codec.decode(i) == label

    def test_unknown_label_rejected(self):
        codec = LabelCodec.from_labels([TemplateId("minimal"), TemplateId("verbose")])
        with pytest.raises(ContractViolation):
            codec.encode(TemplateId("standard"))


class TestTraining:
    def test_synthetic_clusters_above_95_percent(self, trained):
        model, _, X, labels, _, test_idx = trained
        acc = holdout_accuracy(model, X[test_idx], [labels[i] for i in test_idx])
        assert acc >= 0.95

    def test_seeded_determinism_bit_identical(self, cluster_data):
        X, labels = cluster_data
        cfg = TrainConfig(seed=1, batch_size=128, max_epochs=4, patience=2)
        m1, r1 = train_mlp(X[:600], labels[:600], cfg)
        m2, r2 = train_mlp(X[:600], labels[:600], cfg)
        for a, b in zip(m1.weights + m1.biases, m2.weights + m2.biases):
            assert np.array_equal(a, b)
        assert r1.epochs_run == r2.epochs_run

    def test_single_class_rejected(self):
        X = np.random.default_rng(0).standard_normal((40, 8))
        with pytest.raises(TrainingError):
            train_mlp(X, [TemplateId("minimal")] * 40, TrainConfig())

    def test_small_class_rejected(self):
        X = np.random.default_rng(0).standard_normal((15, 8))
        labels = [TemplateId("minimal")] * 10 + [TemplateId("verbose")] * 5
        with pytest.raises(TrainingError):
            train_mlp(X, labels, TrainConfig())

    def test_fresh_model_loss_near_ln_k(self, cluster_data):
        X, labels = cluster_data
        cfg = TrainConfig(seed=2, max_epochs=1, batch_size=2000, l2_alpha=0.0)
        model, report = train_mlp(X, labels, cfg)
        # One huge batch: the first recorded loss is the at-init loss.
        assert abs(report.final_train_loss - np.log(5)) < 0.05

    def test_l2_shrinks_weight_norms(self, cluster_data):
        X, labels = cluster_data
        base = dict(seed=3, batch_size=128, max_epochs=6, patience=6)
        plain, _ = train_mlp(X[:800], labels[:800], TrainConfig(l2_alpha=0.0, **base))
        decayed, _ = train_mlp(X[:800], labels[:800], TrainConfig(l2_alpha=0.01, **base))
        norm_plain = sum(float((W * W).sum()) for W in plain.weights)
        norm_decayed = sum(float((W * W).sum()) for W in decayed.weights)
        assert norm_decayed < norm_plain

    def test_early_stopping_restores_best(self, cluster_data):
        X, labels = cluster_data
        cfg = TrainConfig(seed=8, batch_size=128, max_epochs=12, patience=3)
        model, report = train_mlp(
            X[:800], labels[:800], cfg, X_val=X[800:1000], labels_val=labels[800:1000]
        )
        y_val = np.array([model.codec.encode(l) for l in labels[800:1000]])
        recomputed = model.mean_xent(X[800:1000], y_val)
        # The restored parameters reproduce the best validation loss exactly.
        assert recomputed == pytest.approx(report.best_validation_loss, rel=1e-12)
        assert report.epochs_run <= 12

    def test_epochs_bounded_by_config(self, cluster_data):
        X, labels = cluster_data
        cfg = TrainConfig(seed=4, batch_size=256, max_epochs=3)
        _, report = train_mlp(X[:500], labels[:500], cfg)
        assert report.epochs_run <= 3


class TestPredictProba:
    def test_sums_to_one_and_nonnegative(self, trained):
        model, _, X, _, _, _ = trained
        rng = np.random.default_rng(5)
        for _ in range(100):
            probs = model.predict_proba(rng.standard_normal(X.shape[1]))
            assert abs(probs.sum() - 1.0) < 1e-9
            assert np.all(probs >= 0.0)

    def test_centroid_confidence_above_0_9(self, trained):
        model, _, X, labels, train_idx, _ = trained
        for i, template in enumerate(CANONICAL_TEMPLATES):
            mask = np.array([labels[j] == template for j in train_idx])
            centroid = X[train_idx][mask].mean(axis=0)
            assert model.predict_proba(centroid)[i] > 0.9

    def test_zero_weights_give_uniform(self):
        dim, k = 12, 5
        model = MlpModel(
            weights=(np.zeros((dim, 8)), np.zeros((8, k))),
            biases=(np.zeros(8), np.zeros(k)),
            l2_alpha=0.0,
            codec=FULL_CODEC,
            standardizer=Standardizer(mean=np.zeros(dim), std=np.ones(dim)),
        )
        probs = model.predict_proba(np.random.default_rng(0).standard_normal(dim))
        assert np.allclose(probs, 0.2, atol=1e-12)

    def test_dimension_mismatch(self, trained):
        model, _, _, _, _, _ = trained
        with pytest.raises(IntegrityError):
            model.predict_proba(np.zeros(10))

    def test_pure_function(self, trained):
        model, _, X, _, _, _ = trained
        x = X[0]
        first = model.predict_proba(x)
        for _ in range(10):
            assert np.array_equal(model.predict_proba(x), first)

    def test_logit_shift_invariance(self):
        from promptgate.mlp import kernels

        rng = np.random.default_rng(6)
        Z = rng.standard_normal((20, 5))
        base = kernels.softmax_rows(Z)
        shifted = kernels.softmax_rows(Z + 13.7)
        assert np.allclose(base, shifted, atol=1e-12)
        assert np.array_equal(base.argmax(axis=1), shifted.argmax(axis=1))


class TestGradientCheck:
    def test_fresh_small_model_below_1e4(self):
        model = small_model()
        rng = np.random.default_rng(10)
        X = rng.standard_normal((6, 16))
        y = rng.integers(0, 5, 6)
        assert gradient_check(model, X, y, n_coords=250) < 1e-4

    def test_near_zero_loss_still_passes(self):
        # Widening the output layer saturates the softmax: the data-fit
        # gradient vanishes and only the quadratic penalty remains.
        base = small_model(l2_alpha=0.01)
        model = MlpModel(
            weights=(base.weights[0], base.weights[1] * 50.0),
            biases=base.biases,
            l2_alpha=0.01,
            codec=base.codec,
            standardizer=base.standardizer,
        )
        rng = np.random.default_rng(13)
        X = rng.standard_normal((6, 16))
        _, logits = model._forward(model.standardizer.transform(X))
        y = logits.argmax(axis=1)
        loss, _, _ = model.loss_and_grads(X, y)
        data_fit = loss - 0.01 * sum(float((W * W).sum()) for W in model.weights)
        assert data_fit < 0.05
        assert gradient_check(model, X, y, n_coords=250) < 1e-4

    def test_sign_flip_detected(self, monkeypatch):
        model = small_model()
        rng = np.random.default_rng(11)
        X = rng.standard_normal((6, 16))
        y = rng.integers(0, 5, 6)

        original = MlpModel.loss_and_grads

        def corrupted(self, Xb, yb):
            loss, gw, gb = original(self, Xb, yb)
            gw = [-g for g in gw]  # flipped backward pass
            return loss, gw, gb

        monkeypatch.setattr(MlpModel, "loss_and_grads", corrupted)
        assert gradient_check(model, X, y, n_coords=250) > 1e-1

    def test_batch_size_limit(self):
        model = small_model()
        X = np.zeros((9, 16))
        with pytest.raises(ContractViolation):
            gradient_check(model, X, np.zeros(9, dtype=np.int64))


class TestKernelBackends:
    def test_backends_agree(self):
        from promptgate.mlp import kernels_numba, kernels_numpy

        rng = np.random.default_rng(12)
        X = rng.standard_normal((17, 9))
        mu, sd = X.mean(0), X.std(0)
        assert np.allclose(
            kernels_numpy.standardize(X, mu, sd, 1e-8),
            kernels_numba.standardize(X, mu, sd, 1e-8),
        )
        Z = rng.standard_normal((17, 5))
        y = rng.integers(0, 5, 17)
        p_np, l_np = kernels_numpy.softmax_xent(Z, y)
        p_nb, l_nb = kernels_numba.softmax_xent(Z, y)
        assert np.allclose(p_np, p_nb, atol=1e-12)
        assert abs(l_np - l_nb) < 1e-12
        assert np.allclose(
            kernels_numpy.xent_backward(p_np, y), kernels_numba.xent_backward(p_nb, y),
            atol=1e-15,
        )
        d = rng.standard_normal((17, 9))
        a = kernels_numpy.relu(X)
        assert np.array_equal(a, kernels_numba.relu(X))
        assert np.array_equal(
            kernels_numpy.relu_backward(d, a), kernels_numba.relu_backward(d, a)
        )

        p1 = rng.standard_normal(1000)
        p2 = p1.copy()
        g = rng.standard_normal(1000)
        m1, v1 = np.zeros(1000), np.zeros(1000)
        m2, v2 = np.zeros(1000), np.zeros(1000)
        for t in range(1, 4):
            kernels_numpy.adam_update(p1, g, m1, v1, t, 1e-3, 0.9, 0.999, 1e-8)
            kernels_numba.adam_update(p2, g, m2, v2, t, 1e-3, 0.9, 0.999, 1e-8)
        assert np.allclose(p1, p2, atol=1e-14)

    def test_backend_flag_reported(self):
        from promptgate.mlp.kernels import backend_name

        assert backend_name() in ("numba", "numpy")
