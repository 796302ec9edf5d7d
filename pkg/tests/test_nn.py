"""Tests for the networks, heads, gradients and checkpoint container."""

import math

import numpy as np
import pytest
import torch
from scipy.integrate import quad
from scipy.stats import norm

from fwdlearn.core.exceptions import ConfigError
from fwdlearn.core.exceptions import DataError
from fwdlearn.core.exceptions import ShapeError
from fwdlearn.core.exceptions import TrainingFault
from fwdlearn.nn.checkpoint import Checkpoint
from fwdlearn.nn.checkpoint import dumps_checkpoint
from fwdlearn.nn.checkpoint import load_checkpoint
from fwdlearn.nn.checkpoint import load_module_sections
from fwdlearn.nn.checkpoint import load_optimizer_sections
from fwdlearn.nn.checkpoint import loads_checkpoint
from fwdlearn.nn.checkpoint import module_sections
from fwdlearn.nn.checkpoint import optimizer_sections
from fwdlearn.nn.checkpoint import save_checkpoint
from fwdlearn.nn.heads import LOG_STD_MAX
from fwdlearn.nn.heads import LOG_STD_MIN
from fwdlearn.nn.heads import GaussianHeadOutput
from fwdlearn.nn.heads import gaussian_head
from fwdlearn.nn.heads import quantile_fractions
from fwdlearn.nn.heads import quantile_huber_loss
from fwdlearn.nn.heads import squashed_gaussian_sample
from fwdlearn.nn.heads import squashed_log_prob
from fwdlearn.nn.mlp import DTYPE
from fwdlearn.nn.mlp import Mlp
from fwdlearn.nn.mlp import MlpSpec
from fwdlearn.nn.mlp import mish
from fwdlearn.nn.optim import adam_step
from fwdlearn.nn.optim import grad
from fwdlearn.nn.optim import make_adam
from fwdlearn.nn.optim import value_and_grad
from fwdlearn.utils.seeding import torch_generator


def _mlp(seed=0, hidden=(8, 8), final_scale=1.0):
    return Mlp(MlpSpec(3, 2, hidden), torch_generator(seed, "mlp"), final_scale)


class TestMish:
    @pytest.mark.parametrize("x", [-30.0, -1.5, 0.0, 0.7, 25.0])
    def test_scalar_matches_tensor(self, x):
        assert mish(x) == pytest.approx(float(mish(torch.tensor(x, dtype=DTYPE))), rel=1e-12, abs=1e-300)

    def test_known_values(self):
        assert mish(0.0) == 0.0
        assert mish(1.0) == pytest.approx(math.tanh(math.log1p(math.e)))
        assert mish(800.0) == pytest.approx(800.0)
        assert abs(mish(-800.0)) < 1e-300


class TestMlp:
    def test_spec_rejects_zero_width(self):
        with pytest.raises(ConfigError):
            MlpSpec(3, 2, (0,))

    def test_descriptor_hash(self):
        assert MlpSpec(3, 2, (8,)).descriptor_hash() == MlpSpec(3, 2, [8]).descriptor_hash()
        assert MlpSpec(3, 2, (8,)).descriptor_hash() != MlpSpec(3, 2, (9,)).descriptor_hash()

    def test_float64_and_widths(self):
        net = _mlp()
        assert all(p.dtype == DTYPE for p in net.parameters())
        assert [layer.out_features for layer in net.layers] == [8, 8, 2]
        assert net(torch.zeros(5, 3, dtype=DTYPE)).shape == (5, 2)

    def test_same_seed_same_weights(self):
        a, b, c = _mlp(1), _mlp(1), _mlp(2)
        assert all(torch.equal(p, q) for p, q in zip(a.parameters(), b.parameters(), strict=True))
        assert not all(torch.equal(p, q) for p, q in zip(a.parameters(), c.parameters(), strict=True))

    def test_final_scale_zero_gives_zero_output(self):
        net = _mlp(final_scale=0.0)
        assert torch.equal(net(torch.randn(4, 3, dtype=DTYPE)), torch.zeros(4, 2, dtype=DTYPE))

    def test_fan_in_init_bounds(self):
        net = _mlp(hidden=(16,))
        first = net.layers[0].weight
        assert first.abs().max() <= 1.0 / math.sqrt(3)

    def test_input_width_checked(self):
        with pytest.raises(ShapeError):
            _mlp()(torch.zeros(2, 4, dtype=DTYPE))


class TestGaussianHeads:
    def test_head_splits_and_clamps(self):
        raw = torch.tensor([[0.5, -50.0], [1.0, 50.0]], dtype=DTYPE)
        head = gaussian_head(raw)
        assert head.mean.flatten().tolist() == [0.5, 1.0]
        assert head.log_std.flatten().tolist() == [LOG_STD_MIN, LOG_STD_MAX]

    def test_samples_stay_in_bounds(self):
        head = GaussianHeadOutput(torch.zeros(1000, 1, dtype=DTYPE), torch.full((1000, 1), 1.0, dtype=DTYPE))
        low, high = torch.tensor([-0.3], dtype=DTYPE), torch.tensor([0.7], dtype=DTYPE)
        action, log_prob = squashed_gaussian_sample(head, low, high, torch_generator(0, "sample"))
        assert action.shape == (1000, 1)
        assert log_prob.shape == (1000,)
        assert torch.all(action >= low)
        assert torch.all(action <= high)

    def test_deterministic_sample_is_squashed_mean(self):
        head = GaussianHeadOutput(torch.tensor([[0.0]], dtype=DTYPE), torch.tensor([[0.0]], dtype=DTYPE))
        low, high = torch.tensor([-2.0], dtype=DTYPE), torch.tensor([4.0], dtype=DTYPE)
        action, _ = squashed_gaussian_sample(head, low, high, deterministic=True)
        assert float(action) == pytest.approx(1.0)

    def test_sample_log_prob_matches_density(self):
        head = GaussianHeadOutput(torch.full((50, 1), 0.2, dtype=DTYPE), torch.full((50, 1), -0.5, dtype=DTYPE))
        low, high = torch.tensor([-1.0], dtype=DTYPE), torch.tensor([1.0], dtype=DTYPE)
        action, log_prob = squashed_gaussian_sample(head, low, high, torch_generator(3, "sample"))
        assert torch.allclose(squashed_log_prob(head, action, low, high), log_prob, atol=1e-6)

    @pytest.mark.parametrize("x", [-1.2, -0.4, 0.0, 0.9, 1.7])
    def test_log_prob_is_derivative_of_cdf(self, x):
        mean, std, lo, hi = 0.3, 0.5, -2.0, 2.0

        def cdf(a):
            unit = 2.0 * (a - lo) / (hi - lo) - 1.0
            return norm.cdf((math.atanh(unit) - mean) / std)

        h = 1e-5
        numeric = (cdf(x + h) - cdf(x - h)) / (2.0 * h)
        head = GaussianHeadOutput(torch.tensor([[mean]], dtype=DTYPE), torch.tensor([[math.log(std)]], dtype=DTYPE))
        low, high = torch.tensor([lo], dtype=DTYPE), torch.tensor([hi], dtype=DTYPE)
        analytic = math.exp(float(squashed_log_prob(head, torch.tensor([[x]], dtype=DTYPE), low, high)))
        assert analytic == pytest.approx(numeric, rel=1e-4)

    @pytest.mark.parametrize(("mean", "log_std", "lo", "hi"), [(0.3, math.log(0.5), -2.0, 2.0), (-0.8, 0.0, -0.3, 0.7)])
    def test_density_integrates_to_one(self, mean, log_std, lo, hi):
        head = GaussianHeadOutput(torch.tensor([[mean]], dtype=DTYPE), torch.tensor([[log_std]], dtype=DTYPE))
        low, high = torch.tensor([lo], dtype=DTYPE), torch.tensor([hi], dtype=DTYPE)

        def density(a):
            return math.exp(float(squashed_log_prob(head, torch.tensor([[a]], dtype=DTYPE), low, high)))

        total, _ = quad(density, lo, hi, limit=200)
        assert total == pytest.approx(1.0, abs=1e-3)

    def test_gradient_flows_through_sample(self):
        mean = torch.zeros(4, 1, dtype=DTYPE, requires_grad=True)
        head = GaussianHeadOutput(mean, torch.zeros(4, 1, dtype=DTYPE))
        action, _ = squashed_gaussian_sample(head, torch.tensor([-1.0], dtype=DTYPE), torch.tensor([1.0], dtype=DTYPE), torch_generator(1))
        action.sum().backward()
        assert torch.all(mean.grad > 0)


class TestQuantileHead:
    def test_midpoint_fractions(self):
        assert quantile_fractions(4).tolist() == [0.125, 0.375, 0.625, 0.875]

    def test_zero_when_quantiles_hit_the_target(self):
        pred = torch.full((2, 3), 1.5, dtype=DTYPE)
        assert float(quantile_huber_loss(pred, torch.full((2, 1), 1.5, dtype=DTYPE))) == 0.0

    def test_median_beats_mean(self):
        targets = torch.tensor([0.0, 1.0, 10.0], dtype=DTYPE)
        at_median = quantile_huber_loss(torch.tensor([1.0], dtype=DTYPE), targets)
        at_mean = quantile_huber_loss(torch.tensor([11.0 / 3.0], dtype=DTYPE), targets)
        assert float(at_median) == pytest.approx(1.5)
        assert at_median < at_mean

    def test_asymmetric_weights(self):
        taus = torch.tensor([0.9], dtype=DTYPE)
        under = quantile_huber_loss(torch.tensor([0.0], dtype=DTYPE), torch.tensor([0.5], dtype=DTYPE), taus=taus)
        over = quantile_huber_loss(torch.tensor([1.0], dtype=DTYPE), torch.tensor([0.5], dtype=DTYPE), taus=taus)
        assert float(under) == pytest.approx(0.9 * 0.125)
        assert float(over) == pytest.approx(0.1 * 0.125)

    def test_single_quantile_hand_values(self):
        pred, target = torch.tensor([0.0], dtype=DTYPE), torch.tensor([1.0], dtype=DTYPE)
        assert float(quantile_huber_loss(pred, target)) == pytest.approx(0.25, abs=1e-12)
        tau = torch.tensor([0.9], dtype=DTYPE)
        assert float(quantile_huber_loss(pred, target, taus=tau)) == pytest.approx(0.45, abs=1e-12)

    def test_batched_shapes(self):
        loss = quantile_huber_loss(torch.zeros(8, 5, dtype=DTYPE), torch.ones(8, 5, dtype=DTYPE))
        assert loss.shape == ()
        assert float(loss) == pytest.approx(0.5 * 0.5)


class TestGradients:
    def test_value_and_grad(self):
        p = torch.tensor([1.0, -2.0], dtype=DTYPE, requires_grad=True)
        unused = torch.ones(3, dtype=DTYPE, requires_grad=True)
        value, grads = value_and_grad([p, unused], lambda scale: scale * (p**2).sum(), 3.0)
        assert value == pytest.approx(15.0)
        assert grads[0].tolist() == [6.0, -12.0]
        assert torch.equal(grads[1], torch.zeros(3, dtype=DTYPE))

    def test_constant_loss_has_zero_gradient(self):
        p = torch.ones(2, dtype=DTYPE, requires_grad=True)
        assert torch.equal(grad([p], lambda _: torch.tensor(1.0, dtype=DTYPE))[0], torch.zeros(2, dtype=DTYPE))

    def test_non_finite_loss_raises(self):
        p = torch.ones(2, dtype=DTYPE, requires_grad=True)
        with pytest.raises(TrainingFault, match="param_norms"):
            value_and_grad([p], lambda _: p.sum() / 0.0 - p.sum() / 0.0)

    def test_first_adam_step_moves_by_lr(self):
        p = torch.tensor([0.5, 0.5, 0.5], dtype=DTYPE, requires_grad=True)
        optimizer = make_adam([p], lr=1e-4)
        adam_step(optimizer, [p], [torch.tensor([2.0, -3.0, 40.0], dtype=DTYPE)])
        assert p.detach().tolist() == pytest.approx([0.5 - 1e-4, 0.5 + 1e-4, 0.5 - 1e-4], rel=1e-9)
        assert p.grad is None


class TestCheckpoint:
    def _checkpoint(self):
        return Checkpoint({"kind": "test", "config": {"seed": 3}}, {"a": np.arange(6.0).reshape(2, 3), "b": np.array([1.5])})

    def test_round_trip(self):
        blob = dumps_checkpoint(self._checkpoint())
        assert blob[:4] == b"FWDC"
        loaded = loads_checkpoint(blob)
        assert loaded.kind == "test"
        assert loaded.header["fwdlearn_version"] == "0.1.0"
        assert np.array_equal(loaded.section("a"), np.arange(6.0).reshape(2, 3))
        assert dumps_checkpoint(loaded) == blob

    def test_missing_section(self):
        with pytest.raises(DataError, match="no section"):
            self._checkpoint().section("c")

    def test_bad_magic(self):
        with pytest.raises(DataError, match="magic"):
            loads_checkpoint(b"FWDB" + dumps_checkpoint(self._checkpoint())[4:])

    def test_truncated(self):
        with pytest.raises(DataError, match="truncated"):
            loads_checkpoint(dumps_checkpoint(self._checkpoint())[:-8])

    def test_trailing_bytes(self):
        with pytest.raises(DataError, match="trailing"):
            loads_checkpoint(dumps_checkpoint(self._checkpoint()) + b"\x00" * 8)

    @pytest.mark.parametrize("version", ["1.0.0", "banana"])
    def test_incompatible_version(self, version):
        checkpoint = self._checkpoint()
        checkpoint.header["fwdlearn_version"] = version
        with pytest.raises(DataError):
            loads_checkpoint(dumps_checkpoint(checkpoint))

    def test_save_and_load(self, tmp_path):
        path = save_checkpoint(tmp_path / "ckpt" / "model.fwdc", self._checkpoint())
        assert [p.name for p in path.parent.iterdir()] == ["model.fwdc"]
        assert load_checkpoint(path).kind == "test"

    def test_load_missing(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            load_checkpoint(tmp_path / "absent.fwdc")

    def test_module_round_trip(self):
        source, target = _mlp(1), _mlp(2)
        checkpoint = Checkpoint({}, module_sections("net", source))
        load_module_sections(target, checkpoint, "net")
        x = torch.randn(3, 3, dtype=DTYPE)
        assert torch.equal(source(x), target(x))

    def test_module_shape_mismatch(self):
        checkpoint = Checkpoint({}, module_sections("net", _mlp(hidden=(4, 4))))
        with pytest.raises(DataError, match="shape"):
            load_module_sections(_mlp(), checkpoint, "net")

    def test_optimizer_sections_before_first_step(self):
        net = _mlp()
        sections = optimizer_sections("opt", make_adam(net.parameters(), 1e-3), net.parameters())
        assert sections["opt.0.step"].tolist() == [0.0]
        assert not sections["opt.0.exp_avg"].any()

    def test_optimizer_round_trip_continues_identically(self):
        grads_seq = [[torch.full_like(p, 0.1 * (k + 1)) for p in _mlp().parameters()] for k in range(3)]
        a = _mlp()
        opt_a = make_adam(a.parameters(), 1e-2)
        for grads in grads_seq[:2]:
            adam_step(opt_a, list(a.parameters()), grads)

        checkpoint = Checkpoint({}, {**module_sections("net", a), **optimizer_sections("opt", opt_a, a.parameters())})
        b = _mlp(9)
        opt_b = make_adam(b.parameters(), 1e-2)
        load_module_sections(b, checkpoint, "net")
        load_optimizer_sections(opt_b, b.parameters(), checkpoint, "opt")

        adam_step(opt_a, list(a.parameters()), grads_seq[2])
        adam_step(opt_b, list(b.parameters()), grads_seq[2])
        assert all(torch.equal(p, q) for p, q in zip(a.parameters(), b.parameters(), strict=True))
