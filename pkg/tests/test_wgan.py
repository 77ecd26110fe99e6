import math

import numpy as np
import pytest

from tomoforge import (ColormapId, DivergenceError, QuantumState,
                       assemble_dataset)
from tomoforge.tomogrid import TomogramGrid
from tomoforge.wgan import (Adam, BatchNorm, Conv2D, ConvT2D, GradientPenalty,
                            InstanceNorm, LeakyReLU, Scale, Tanh, TrainConfig,
                            WeightClip, build_critic, build_generator,
                            critic_config, generator_config, load_model,
                            sample, save_model, train)
from tomoforge.wgan.network import (CRITIC_CHANNELS, GENERATOR_CHANNELS,
                                    LayerOp)

GEN_COUNTS_FULL = [819200, 1024, 2097152, 512, 524288, 256, 131072, 128,
                   32768, 64, 1539]
CRITIC_COUNTS_FULL = [784, 8192, 64, 32768, 128, 131072, 256, 524288, 512,
                      4097]

GEN_SHAPES_FULL = [(512, 4, 4), (512, 4, 4), (256, 8, 8), (256, 8, 8),
                   (128, 16, 16), (128, 16, 16), (64, 32, 32), (64, 32, 32),
                   (32, 64, 64), (32, 64, 64), (3, 128, 128)]
CRITIC_SHAPES_FULL = [(16, 64, 64), (32, 32, 32), (32, 32, 32), (64, 16, 16),
                      (64, 16, 16), (128, 8, 8), (128, 8, 8), (256, 4, 4),
                      (256, 4, 4), (1, 1, 1)]


def rng(seed=0):
    return np.random.default_rng(seed)


def small_dataset(n_states=1):
    states = [QuantumState.coherent(0.0), QuantumState.fock(1)][:n_states]
    return assemble_dataset(states, grid=TomogramGrid(n_x=32, n_theta=32))


class TestArchitecture:
    def test_full_generator_parameter_counts(self):
        net = build_generator(Scale.FULL128, rng())
        assert net.layer_parameter_counts() == GEN_COUNTS_FULL
        assert net.total_parameters() == 3_608_003

    def test_full_critic_parameter_counts(self):
        net = build_critic(Scale.FULL128, rng())
        assert net.layer_parameter_counts() == CRITIC_COUNTS_FULL
        assert net.total_parameters() == 702_161

    def test_full_generator_shapes(self):
        net = build_generator(Scale.FULL128, rng())
        z = rng(1).normal(size=(1, 100, 1, 1))
        assert net.output_shapes(z) == GEN_SHAPES_FULL

    def test_full_critic_shapes(self):
        net = build_critic(Scale.FULL128, rng())
        x = rng(1).normal(size=(1, 3, 128, 128))
        assert net.output_shapes(x) == CRITIC_SHAPES_FULL

    def test_full_generator_forward(self):
        net = build_generator(Scale.FULL128, rng())
        z = rng(2).normal(size=(2, 100, 1, 1))
        out = net.forward(z, train=False)
        assert out.shape == (2, 3, 128, 128)
        assert np.all(out >= -1.0) and np.all(out <= 1.0)

    def test_desk_shapes_and_counts(self):
        gen = build_generator(Scale.DESK32, rng())
        out = gen.forward(rng(1).normal(size=(2, 32, 1, 1)), train=False)
        assert out.shape == (2, 3, 32, 32)
        # closed-form k*k*in*out sums over the scaled channel chain
        ch = GENERATOR_CHANNELS[Scale.DESK32]
        conv_costs = [16 * a * b for a, b in zip(ch[:-1], ch[1:])]
        expected = []
        for i, c in enumerate(conv_costs):
            expected.append(c + (ch[i + 1] if i == len(conv_costs) - 1 else 0))
            if i < len(conv_costs) - 1:
                expected.append(2 * ch[i + 1])
        assert gen.layer_parameter_counts() == expected

        critic = build_critic(Scale.DESK32, rng())
        score = critic.forward(out, train=False)
        assert score.shape == (2, 1, 1, 1)
        dch = CRITIC_CHANNELS[Scale.DESK32]
        costs = [16 * a * b for a, b in zip(dch[:-1], dch[1:])]
        expected_c = [costs[0] + dch[1]]
        for i in range(1, len(costs) - 1):
            expected_c += [costs[i], 2 * dch[i + 1]]
        expected_c.append(costs[-1] + 1)
        assert critic.layer_parameter_counts() == expected_c

    def test_critic_bias_placement(self):
        cfg = critic_config(Scale.FULL128)
        convs = [s for s in cfg.layers if s.op is LayerOp.CONV]
        assert [s.has_bias for s in convs] == [True, False, False, False,
                                               False, True]

    def test_generator_bias_placement(self):
        cfg = generator_config(Scale.FULL128)
        convts = [s for s in cfg.layers if s.op is LayerOp.CONV_T]
        assert [s.has_bias for s in convts] == [False] * 5 + [True]

    def test_zero_critic_scores_zero(self):
        critic = build_critic(Scale.DESK32, rng())
        for p in critic.parameters():
            p[...] = 0.0
        x = rng(3).normal(size=(4, 3, 32, 32))
        assert np.all(critic.forward(x, train=False) == 0.0)

    def test_shape_mismatch_raises(self):
        critic = build_critic(Scale.DESK32, rng())
        with pytest.raises(ValueError):
            critic.forward(rng(0).normal(size=(1, 4, 32, 32)))


class TestLayerSemantics:
    def test_conv_shape_example(self):
        layer = Conv2D(3, 16, 4, 2, 1, True, rng())
        out = layer.forward(rng(1).normal(size=(1, 3, 128, 128)), train=False)
        assert out.shape == (1, 16, 64, 64)

    def test_convt_shape_example(self):
        layer = ConvT2D(100, 512, 4, 1, 0, False, rng())
        out = layer.forward(rng(1).normal(size=(1, 100, 1, 1)), train=False)
        assert out.shape == (1, 512, 4, 4)

    def test_instance_norm_statistics(self):
        layer = InstanceNorm(5)
        x = rng(4).normal(2.0, 3.0, size=(3, 5, 8, 8))
        y = layer.forward(x, train=False)
        assert np.max(np.abs(y.mean(axis=(2, 3)))) < 1e-6
        assert np.max(np.abs(y.var(axis=(2, 3)) - 1.0)) < 1e-4

    def test_batchnorm_train_vs_eval(self):
        layer = BatchNorm(4)
        x = rng(5).normal(1.0, 2.0, size=(8, 4, 6, 6))
        y = layer.forward(x, train=True)
        assert np.max(np.abs(y.mean(axis=(0, 2, 3)))) < 1e-6
        # eval mode uses the (partially updated) running statistics instead
        y_eval = layer.forward(x, train=False)
        assert not np.allclose(y, y_eval)

    def test_leaky_relu_slope(self):
        layer = LeakyReLU(0.2)
        x = np.array([[[[-1.0, 2.0]]]])
        assert np.allclose(layer.forward(x), [[[[-0.2, 2.0]]]])

    def test_tanh_backward_at_zero(self):
        layer = Tanh()
        layer.forward(np.zeros((1, 1, 1, 1)))
        assert layer.backward(np.ones((1, 1, 1, 1)))[0, 0, 0, 0] == 1.0

    def test_backward_without_forward(self):
        layer = Conv2D(2, 2, 4, 2, 1, False, rng())
        with pytest.raises(RuntimeError):
            layer.backward(np.zeros((1, 2, 4, 4)))
        layer.forward(rng(0).normal(size=(1, 2, 8, 8)), train=False)
        with pytest.raises(RuntimeError):
            layer.backward(np.zeros((1, 2, 4, 4)))


def loss_with(layer, x, weights, probe):
    out = layer.forward(x, train=True)
    return float((out * probe).sum())


def central_difference(setter, getter, f, eps=1e-6):
    base = getter()
    setter(base + eps)
    hi = f()
    setter(base - eps)
    lo = f()
    setter(base)
    return (hi - lo) / (2 * eps)


LAYER_FACTORIES = {
    "conv": lambda r: (Conv2D(3, 4, 4, 2, 1, True, r), (2, 3, 8, 8)),
    "convt": lambda r: (ConvT2D(3, 4, 4, 2, 1, True, r), (2, 3, 4, 4)),
    "batchnorm": lambda r: (BatchNorm(3), (4, 3, 5, 5)),
    "instancenorm": lambda r: (InstanceNorm(3), (2, 3, 6, 6)),
    "leakyrelu": lambda r: (LeakyReLU(0.2), (2, 3, 5, 5)),
    "tanh": lambda r: (Tanh(), (2, 3, 5, 5)),
}


@pytest.mark.parametrize("name", sorted(LAYER_FACTORIES))
def test_layer_gradients_match_finite_differences(name):
    """Spot check here; the acceptance suite runs the full 100-trial sweep."""
    r = rng(123)
    for trial in range(10):
        layer, shape = LAYER_FACTORIES[name](r)
        x = r.normal(size=shape)
        probe = r.normal(size=layer.forward(x, train=True).shape)
        layer.forward(x, train=True)
        dx = layer.backward(probe)

        def f():
            return float((layer.forward(x, train=True) * probe).sum())

        xi = tuple(r.integers(0, s) for s in shape)
        fd = central_difference(
            lambda v: x.__setitem__(xi, v), lambda: x[xi], f)
        assert fd == pytest.approx(dx[xi], rel=1e-4, abs=1e-7)

        for pname in layer.trainable_names:
            param = getattr(layer, pname)
            grad = getattr(layer, "d_" + pname)
            pi = tuple(r.integers(0, s) for s in param.shape)
            fd = central_difference(
                lambda v: param.__setitem__(pi, v), lambda: param[pi], f)
            assert fd == pytest.approx(grad[pi], rel=1e-4, abs=1e-7)


def test_full_desk_critic_gradient_check():
    r = rng(7)
    critic = build_critic(Scale.DESK32, r)
    x = r.normal(size=(2, 3, 32, 32))

    def f():
        return float(critic.forward(x, train=True).sum())

    f()
    critic.backward(np.ones((2, 1, 1, 1)))
    params = critic.parameters()
    grads = critic.gradients()
    checked = 0
    for k in range(10):
        p = params[k % len(params)]
        g = grads[k % len(params)]
        pi = tuple(r.integers(0, s) for s in p.shape)
        fd = central_difference(lambda v: p.__setitem__(pi, v),
                                lambda: p[pi], f, eps=1e-5)
        assert fd == pytest.approx(g[pi], rel=1e-3, abs=1e-8)
        checked += 1
    assert checked == 10


class TestAdam:
    def test_zero_gradient_no_motion(self):
        p = np.ones(4)
        opt = Adam([p], lr=0.1)
        opt.step([np.zeros(4)])
        assert np.array_equal(p, np.ones(4))

    def test_constant_gradient_step_approaches_lr(self):
        p = np.zeros(1)
        opt = Adam([p], lr=1e-3)
        g = np.array([0.37])
        prev = p.copy()
        for _ in range(200):
            prev = p.copy()
            opt.step([g])
        # bias-corrected RMS equals |g|, so each step has magnitude lr
        assert abs(p[0] - prev[0]) == pytest.approx(1e-3, rel=1e-4)

    def test_beta1_zero_direction_is_current_gradient(self):
        # first step: v_hat = g^2 exactly, so the update is -lr * sign(g)
        p = np.zeros(3)
        opt = Adam([p], lr=0.01, beta1=0.0)
        g = np.array([1.0, -2.0, 0.5])
        opt.step([g])
        assert np.allclose(p, -0.01 * np.sign(g), rtol=1e-6)

    def test_shape_validation(self):
        opt = Adam([np.zeros(3)])
        with pytest.raises(ValueError):
            opt.step([np.zeros(4)])


class TestTraining:
    def test_short_run_is_deterministic(self):
        ds = small_dataset()
        tc = TrainConfig(batch_size=8, epochs=3, seed=11)
        m1, log1 = train(ds, tc=tc, scale=Scale.DESK32)
        m2, log2 = train(ds, tc=tc, scale=Scale.DESK32)
        assert log1.content_rows() == log2.content_rows()
        for a, b in zip(m1.generator.parameters(), m2.generator.parameters()):
            assert np.array_equal(a, b)

    def test_zero_epochs_keeps_initialization(self):
        ds = small_dataset()
        tc = TrainConfig(batch_size=4, epochs=0, seed=5)
        model, log = train(ds, tc=tc, scale=Scale.DESK32)
        assert log.rows == []
        fresh = build_generator(Scale.DESK32, np.random.default_rng(5))
        for a, b in zip(model.generator.parameters(), fresh.parameters()):
            assert np.array_equal(a, b)
        imgs = sample(model, 2, seed=1)
        assert imgs[0].pixels.shape == (32, 32, 3)

    def test_weight_clipping_bounds_critic(self):
        ds = small_dataset()
        tc = TrainConfig(batch_size=8, epochs=2, seed=3,
                         lipschitz=WeightClip(0.01))
        model, _ = train(ds, tc=tc, scale=Scale.DESK32)
        for p in model.critic.parameters():
            assert np.max(np.abs(p)) <= 0.01 + 1e-15

    def test_lipschitz_diagnostic_logged(self):
        ds = small_dataset()
        tc = TrainConfig(batch_size=8, epochs=3, seed=3,
                         lipschitz=GradientPenalty(10.0))
        model, log = train(ds, tc=tc, scale=Scale.DESK32)
        diag = log.column("lipschitz_diag")
        assert len(diag) == 3
        assert np.all(np.isfinite(diag)) and np.all(diag > 0)
        # gradient-penalty mode does not clip
        assert any(np.max(np.abs(p)) > 0.01 for p in model.critic.parameters())

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_guard(self):
        ds = small_dataset()
        tc = TrainConfig(batch_size=8, epochs=50, seed=1, lr=1e200,
                         lipschitz=GradientPenalty(10.0))
        with pytest.raises(DivergenceError) as err:
            train(ds, tc=tc, scale=Scale.DESK32)
        assert err.value.epoch is not None

    def test_dataset_shape_mismatch(self):
        ds = assemble_dataset([QuantumState.fock(0)])   # 128 x 128 images
        with pytest.raises(ValueError):
            train(ds, tc=TrainConfig(epochs=1), scale=Scale.DESK32)


class TestSampling:
    def test_sample_count_and_determinism(self):
        ds = small_dataset()
        model, _ = train(ds, tc=TrainConfig(batch_size=4, epochs=1, seed=2),
                         scale=Scale.DESK32)
        imgs = sample(model, 100, seed=9)
        assert len(imgs) == 100
        again = sample(model, 100, seed=9)
        for a, b in zip(imgs, again):
            assert np.array_equal(a.pixels, b.pixels)
        other = sample(model, 100, seed=10)
        assert any(not np.array_equal(a.pixels, b.pixels)
                   for a, b in zip(imgs, other))

    def test_checkpoint_round_trip(self, tmp_path):
        ds = small_dataset()
        model, _ = train(ds, tc=TrainConfig(batch_size=4, epochs=2, seed=8),
                         scale=Scale.DESK32)
        path = tmp_path / "model.ckpt"
        save_model(model, path)
        back = load_model(path)
        for a, b in zip(model.generator.parameters(),
                        back.generator.parameters()):
            assert np.array_equal(a, b)
        for a, b in zip(model.generator.buffers(), back.generator.buffers()):
            assert np.array_equal(a, b)
        assert back.train_cfg == model.train_cfg
        assert back.colormap == model.colormap
        x, y = sample(model, 3, seed=0), sample(back, 3, seed=0)
        for a, b in zip(x, y):
            assert np.array_equal(a.pixels, b.pixels)


class TestTrainLog:
    def test_csv_round_trip(self, tmp_path):
        ds = small_dataset()
        _, log = train(ds, tc=TrainConfig(batch_size=4, epochs=3, seed=4),
                       scale=Scale.DESK32)
        path = tmp_path / "log.csv"
        log.to_csv(path)
        from tomoforge.wgan import TrainLog

        back = TrainLog.from_csv(path)
        assert back.content_rows() == log.content_rows()
