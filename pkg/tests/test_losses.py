import math

import numpy as np
import pytest

from protofed.errors import ConfigError, DimensionError, ImbalanceConfigError, SimilarityUndefinedError
from protofed.losses import (
    ClassCounts,
    class_weights,
    contrastive_loss,
    contrastive_pair_losses,
    contrastive_term,
    federated_objective,
    l2_proto_penalty,
    l2_term,
    prototype_contrastive,
    supervised_loss,
    total_loss,
    weighted_supervised_loss,
)
from protofed.models.pd.loss import LossConfig
from protofed.ndkernel import Tensor
from protofed.ndkernel.gradcheck import check_gradients
from protofed.prototypes import PrototypeSet

ORTHOGONAL_POS = math.log1p(math.exp(-2.0))


def protos(v0, v1, n0=10, n1=1):
    return PrototypeSet.from_vectors({0: v0, 1: v1}, {0: n0, 1: n1})


@pytest.fixture
def orthogonal():
    return protos([1.0, 0.0], [0.0, 1.0])


class TestSupervisedLoss:
    def test_zero_logits_balanced(self):
        loss = supervised_loss(np.zeros((4, 2)), np.array([0, 1, 0, 1]), ClassCounts(5, 5))
        assert loss == pytest.approx(math.log(2.0), rel=1e-12)

    def test_confident_correct(self):
        logits = np.array([[20.0, -20.0], [-20.0, 20.0]])
        assert supervised_loss(logits, np.array([0, 1]), ClassCounts(3, 3)) < 1e-3

    def test_minority_weight(self):
        counts = ClassCounts(10, 1)
        logits = np.zeros((1, 2))
        icing = supervised_loss(logits, np.array([1]), counts)
        non_icing = supervised_loss(logits, np.array([0]), counts)
        assert icing == pytest.approx(5.5 * math.log(2.0))
        assert non_icing == pytest.approx(0.55 * math.log(2.0))

    def test_matches_direct_formula(self, rng):
        logits = rng.normal(size=(7, 2))
        labels = rng.integers(0, 2, size=7)
        labels[:2] = [0, 1]
        counts = ClassCounts(30, 6)
        log_probs = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        weights = np.where(labels == 1, 36 / (2 * 6), 36 / (2 * 30))
        expected = -np.mean(weights * log_probs[np.arange(7), labels])
        assert supervised_loss(logits, labels, counts) == pytest.approx(expected, rel=1e-12)

    def test_present_class_without_count(self):
        with pytest.raises(ImbalanceConfigError):
            supervised_loss(np.zeros((2, 2)), np.array([0, 1]), ClassCounts(4, 0))

    def test_gradient(self, rng):
        logits = Tensor(rng.normal(size=(5, 2)), name='logits')
        labels = np.array([0, 1, 0, 0, 1])
        errors = check_gradients(lambda: weighted_supervised_loss(logits, labels, ClassCounts(8, 2)), [logits])
        assert errors['logits'] < 1e-6

    def test_nonnegative(self, rng):
        assert supervised_loss(rng.normal(size=(6, 2)), np.array([0, 1] * 3), ClassCounts(2, 2)) >= 0


class TestClassWeights:
    def test_example(self):
        w_pos, w_neg = class_weights(ClassCounts(10, 1), 2.0, 1e-8)
        assert w_pos == pytest.approx(0.01)
        assert w_neg == pytest.approx(1.0)

    def test_gamma_zero(self):
        assert class_weights(ClassCounts(10, 1), 0.0, 1e-8) == (1.0, 1.0)

    def test_symmetric_and_monotone(self):
        w_pos, w_neg = class_weights(ClassCounts(7, 7), 2.0, 1e-8)
        assert w_pos == w_neg
        assert class_weights(ClassCounts(8, 7), 2.0, 1e-8)[0] < w_pos

    def test_zero_count_is_guarded(self):
        assert math.isfinite(class_weights(ClassCounts(5, 0), 2.0, 1e-8)[1])

    def test_negative_gamma(self):
        with pytest.raises(ConfigError):
            class_weights(ClassCounts(1, 1), -1.0, 1e-8)


class TestContrastive:
    def test_orthogonal_example(self, orthogonal):
        l_pos, l_neg = contrastive_pair_losses(orthogonal, orthogonal, tau=0.5, eps=0.0)
        assert l_pos == pytest.approx(ORTHOGONAL_POS, rel=1e-12)
        assert l_neg == pytest.approx(l_pos, rel=1e-12)

    def test_equal_similarity_gives_log_two(self, orthogonal):
        local = protos([1.0, 1.0], [1.0, 1.0])
        l_pos, _ = contrastive_pair_losses(local, orthogonal, tau=0.5, eps=1e-8)
        assert l_pos == pytest.approx(math.log(2.0), rel=1e-6)

    def test_scale_invariant(self, orthogonal, rng):
        local = protos(rng.normal(size=2), rng.normal(size=2))
        scaled = protos(3.7 * local.vector(0), 0.2 * local.vector(1))
        np.testing.assert_allclose(
            contrastive_pair_losses(local, orthogonal, 0.5, 1e-8),
            contrastive_pair_losses(scaled, orthogonal, 0.5, 1e-8),
            rtol=1e-12,
        )

    def test_zero_norm(self, orthogonal):
        with pytest.raises(SimilarityUndefinedError):
            contrastive_pair_losses(protos([0.0, 0.0], [0.0, 1.0]), orthogonal, 0.5, 1e-8)

    def test_missing_class(self, orthogonal):
        one_class = PrototypeSet.from_vectors({0: [1.0, 0.0]}, {0: 3})
        with pytest.raises(ValueError):
            contrastive_pair_losses(one_class, orthogonal, 0.5, 1e-8)

    def test_weighted_sum(self, orthogonal):
        config = LossConfig(gamma=0.0, tau=0.5, eps=1e-12)
        assert contrastive_loss(orthogonal, orthogonal, ClassCounts(10, 1), config) == pytest.approx(
            2 * ORTHOGONAL_POS, rel=1e-9)

    def test_minority_term_dominates(self, rng):
        local = protos(rng.normal(size=3), rng.normal(size=3))
        global_ = protos(rng.normal(size=3), rng.normal(size=3))
        config = LossConfig(gamma=2.0)
        l_pos, l_neg = contrastive_pair_losses(local, global_, config.tau, config.eps)
        w_pos, w_neg = class_weights(ClassCounts(100, 1), config.gamma, config.eps)
        assert w_neg > 1000 * w_pos
        assert contrastive_loss(local, global_, ClassCounts(100, 1), config) == pytest.approx(
            w_pos * l_pos + w_neg * l_neg)

    def test_gradient_wrt_local_prototypes(self, rng):
        local = Tensor(rng.normal(size=(2, 4)), name='local')
        global_ = rng.normal(size=(2, 4))
        errors = check_gradients(
            lambda: prototype_contrastive(local, [0, 1], global_, tau=0.5, eps=1e-8).sum(), [local])
        assert errors['local'] < 1e-4

    def test_term_for_one_present_class(self, rng):
        global_ = protos(rng.normal(size=3), rng.normal(size=3))
        local = Tensor(rng.normal(size=(1, 3)), name='local')
        config = LossConfig()
        counts = ClassCounts(20, 2)
        term = contrastive_term(local, [1], global_, counts, config)
        single = prototype_contrastive(local, [1], global_.as_matrix(), config.tau, config.eps).data[0]
        assert term.item() == pytest.approx(class_weights(counts, config.gamma, config.eps)[1] * single)
        errors = check_gradients(lambda: contrastive_term(local, [1], global_, counts, config), [local])
        assert errors['local'] < 1e-4


class TestTotalLoss:
    def test_endpoints_and_mix(self):
        assert total_loss(0.8, 0.4, 0.0) == 0.8
        assert total_loss(0.8, 0.4, 1.0) == 0.4
        assert total_loss(0.8, 0.4, 0.25) == pytest.approx(0.7)

    def test_lambda_range(self):
        with pytest.raises(ConfigError):
            total_loss(1.0, 1.0, 1.5)

    def test_tensor_inputs(self):
        l_s = Tensor(0.8, requires_grad=True)
        l_c = Tensor(0.4, requires_grad=True)
        out = total_loss(l_s, l_c, 0.25)
        out.backward()
        assert out.item() == pytest.approx(0.7)
        assert l_s.grad == pytest.approx(0.75)
        assert l_c.grad == pytest.approx(0.25)


class TestL2Penalty:
    def test_examples(self):
        local = PrototypeSet.from_vectors({0: [3.0, 4.0]}, {0: 1})
        origin = PrototypeSet.from_vectors({0: [0.0, 0.0]}, {0: 1})
        assert l2_proto_penalty(local, origin) == pytest.approx(5.0)
        assert l2_proto_penalty(origin, local) == pytest.approx(5.0)
        assert l2_proto_penalty(local, local) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            l2_proto_penalty(PrototypeSet.from_vectors({0: [1.0]}, {0: 1}),
                             PrototypeSet.from_vectors({0: [1.0, 2.0]}, {0: 1}))

    def test_gradient(self, rng):
        global_ = protos(rng.normal(size=3), rng.normal(size=3))
        local = Tensor(rng.normal(size=(2, 3)), name='local')
        errors = check_gradients(lambda: l2_term(local, [0, 1], global_), [local])
        assert errors['local'] < 1e-6


class TestFederatedObjective:
    def test_sum_over_clients(self):
        value = federated_objective([(1.0, 2.0, 0.5), (0.5, None, 0.25)])
        assert value == pytest.approx(0.5 * 1.0 + 0.5 * 2.0 / 2 + 0.5)

    def test_lambda_zero_is_supervised_sum(self):
        assert federated_objective([(0.3, 9.0, 0.0), (0.7, 9.0, 0.0)]) == pytest.approx(1.0)
