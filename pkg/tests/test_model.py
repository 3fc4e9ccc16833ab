import numpy as np
import pytest

from protofed.errors import ConfigError, DimensionError, FramingError
from protofed.losses import ClassCounts, contrastive_term, total_loss, weighted_supervised_loss
from protofed.model import dump_arrays, init_params, load_arrays, load_checkpoint, param_count, save_checkpoint
from protofed.models.pd.loss import LossConfig
from protofed.models.pd.model import LcnnConfig
from protofed.ndkernel.gradcheck import check_gradients
from protofed.prototypes import PrototypeSet, batch_class_means

DEFAULT_PARAMS = 33194


class TestConfig:
    def test_embed_dim_follows_last_stage(self):
        assert LcnnConfig().embed_dim == 64
        assert LcnnConfig(conv_channels=(8, 8, 12)).embed_dim == 12

    def test_embed_dim_mismatch(self):
        with pytest.raises(ValueError):
            LcnnConfig(embed_dim=32)

    def test_binary_only(self):
        with pytest.raises(ValueError):
            LcnnConfig(num_classes=3)


class TestParamCount:
    def test_default_closed_form(self):
        assert param_count(LcnnConfig()) == DEFAULT_PARAMS

    @pytest.mark.parametrize('overrides', [
        {},
        {'input_dim': 4, 'window': 8, 'lstm_hidden': 4, 'conv_channels': (4, 6, 6)},
        {'lstm_hidden': 8, 'conv_channels': (3, 5, 7), 'kernel_size': 5, 'se_reduction': 8},
    ])
    def test_matches_initialized_model(self, overrides):
        config = LcnnConfig(**overrides)
        assert init_params(config, seed=0).num_parameters() == param_count(config)


class TestForward:
    def test_shapes(self, tiny_model, rng):
        emb, logits = tiny_model.forward(rng.normal(size=(5, 8, 4)))
        assert emb.shape == (5, 6)
        assert logits.shape == (5, 2)

    def test_rejects_wrong_window(self, tiny_model, rng):
        with pytest.raises(DimensionError):
            tiny_model.forward(rng.normal(size=(5, 9, 4)))

    def test_embed_then_head_equals_classify(self, tiny_model, rng):
        x = rng.normal(size=(4, 8, 4))
        np.testing.assert_array_equal(tiny_model.head(tiny_model.embed(x)).data, tiny_model.classify(x).data)

    def test_eval_is_deterministic(self, tiny_model, rng):
        x = rng.normal(size=(3, 8, 4))
        np.testing.assert_array_equal(tiny_model.classify(x).data, tiny_model.classify(x).data)

    def test_predict_batches(self, tiny_model, rng):
        x = rng.normal(size=(7, 8, 4))
        full = np.argmax(tiny_model.classify(x).data, axis=1)
        np.testing.assert_array_equal(tiny_model.predict(x, batch_size=3), full)

    def test_same_seed_same_init(self, tiny_config):
        a = init_params(tiny_config, seed=3).state_dict(include_buffers=True)
        b = init_params(tiny_config, seed=3).state_dict(include_buffers=True)
        c = init_params(tiny_config, seed=4).state_dict()
        assert all(np.array_equal(a[name], b[name]) for name in a)
        assert not np.array_equal(a['lstm.w_ih'], c['lstm.w_ih'])

    def test_training_mode_needs_rng_for_dropout(self, rng):
        model = init_params(LcnnConfig(input_dim=4, window=8, lstm_hidden=4, conv_channels=(4, 6, 6)), seed=0)
        with pytest.raises(ConfigError):
            model.forward(rng.normal(size=(4, 8, 4)), training=True)


class TestFullLossGradient:
    def test_total_loss_gradcheck(self, rng):
        config = LcnnConfig(input_dim=4, window=8, lstm_hidden=4, conv_channels=(4, 6, 6),
                            dropout_rate=0.0, activation='silu')
        model = init_params(config, seed=11)
        x = rng.normal(size=(6, 8, 4))
        labels = np.array([0, 1, 0, 0, 1, 0])
        counts = ClassCounts(n0=40, n1=4)
        global_protos = PrototypeSet.from_vectors(
            {0: rng.normal(size=6), 1: rng.normal(size=6)}, {0: 40, 1: 4},
        )
        loss_config = LossConfig(gamma=0.5)

        def loss():
            emb, logits = model.forward(x, training=True)
            means, classes = batch_class_means(emb, labels)
            supervised = weighted_supervised_loss(logits, labels, counts)
            prototype = contrastive_term(means, classes, global_protos, counts, loss_config)
            return total_loss(supervised, prototype, 0.25)

        errors = check_gradients(loss, model.store.parameters())
        assert max(errors.values()) < 1e-4, errors


class TestCheckpoint:
    def test_round_trip(self, tiny_model, tmp_path, rng):
        path = save_checkpoint(tiny_model, tmp_path / 'ckpt' / 'model.bin')
        other = init_params(tiny_model.config, seed=99)
        load_checkpoint(other, path)
        x = rng.normal(size=(3, 8, 4))
        np.testing.assert_array_equal(other.classify(x).data, tiny_model.classify(x).data)

    def test_layout(self):
        blob = dump_arrays({'a': np.array([1.0, 2.0])})
        header_length = int.from_bytes(blob[:4], 'big')
        assert blob[4:4 + header_length] == b'{"dtype":">f8","tensors":[{"name":"a","shape":[2]}]}'
        assert blob[4 + header_length:] == np.array([1.0, 2.0], dtype='>f8').tobytes()

    def test_truncated_and_trailing(self, tiny_model):
        blob = dump_arrays(tiny_model.state_dict())
        assert list(load_arrays(blob)) == list(tiny_model.state_dict())
        with pytest.raises(FramingError):
            load_arrays(blob[:-1])
        with pytest.raises(FramingError):
            load_arrays(blob + b'\x00')
        with pytest.raises(FramingError):
            load_arrays(blob[:2])
