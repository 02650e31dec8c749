import numpy as np
import pytest

from topocube import (
    InvalidParameter,
    InvalidValue,
    LossConfig,
    SizeMismatch,
    Volume,
    bce_loss,
    bottleneck,
    dice_loss,
    diagrams_of,
    p_norm_diff,
    topological_loss,
    topological_loss_gradient,
    total_persistence,
)

from conftest import generic_pair, smooth_blobs

NO_RESAMPLE = dict(m=None)


def fd_gradient(f_true, x, cfg, h=1e-5):
    shape = x.shape
    flat = x.ravel().copy()
    out = np.zeros_like(flat)
    for i in range(flat.size):
        up, down = flat.copy(), flat.copy()
        up[i] += h
        down[i] -= h
        lp = topological_loss(f_true, Volume(up.reshape(shape)), cfg).topological
        lm = topological_loss(f_true, Volume(down.reshape(shape)), cfg).topological
        out[i] = (lp - lm) / (2 * h)
    return out.reshape(shape)


class TestConfig:
    def test_defaults(self):
        cfg = LossConfig()
        assert cfg.p == 2.0
        assert cfg.lam == 0.1
        assert cfg.dims == (0, 1, 2)
        assert cfg.m == 16

    def test_validation(self):
        with pytest.raises(InvalidParameter):
            LossConfig(p=0.5)
        with pytest.raises(InvalidParameter):
            LossConfig(lam=0.0)
        with pytest.raises(InvalidParameter):
            LossConfig(dims=())
        with pytest.raises(InvalidParameter):
            LossConfig(dims=(3,))
        with pytest.raises(InvalidParameter):
            LossConfig(m=1)
        with pytest.raises(InvalidParameter):
            LossConfig(geometric_loss="mse")


class TestValue:
    def test_flat_zero_pair_has_zero_loss(self):
        z = Volume(np.zeros((4, 4, 4)))
        rep = topological_loss(z, z, LossConfig(**NO_RESAMPLE))
        assert rep.topological == 0.0
        assert rep.total == 0.0
        assert not rep.gradient.data.any()

    def test_perfect_prediction_still_pays_total_persistence(self, rng):
        v = Volume(rng.random((4, 4, 4)))
        cfg = LossConfig(**NO_RESAMPLE)
        rep = topological_loss(v, v, cfg)
        dgs = diagrams_of(v)
        expected = sum(total_persistence(dgs[k], 2.0) for k in range(3))
        assert rep.topological == pytest.approx(expected, rel=1e-12)
        assert rep.topological > 0
        for k, (w, t) in rep.per_dim.items():
            assert w == 0.0

    def test_three_voxel_fixture(self):
        f_true = Volume(np.array([[[1.0]], [[0.2]], [[0.8]]]))
        f_pred = Volume(np.array([[[1.0]], [[0.2]], [[0.6]]]))
        cfg = LossConfig(p=2.0, dims=(0,), m=None)
        rep = topological_loss(f_true, f_pred, cfg)
        w, t = rep.per_dim[0]
        assert w == pytest.approx(0.2, abs=1e-12)
        assert t == pytest.approx(1.16, abs=1e-12)
        assert rep.topological == pytest.approx(1.36, abs=1e-12)

    def test_total_composition(self, rng):
        t, p = smooth_blobs(1, 6), smooth_blobs(2, 6)
        cfg = LossConfig(lam=0.25, geometric_loss="bce", m=None)
        rep = topological_loss(t, p, cfg)
        assert rep.total == pytest.approx(rep.geometric + 0.25 * rep.topological, rel=1e-12)
        assert rep.geometric == pytest.approx(bce_loss(t, p)[0], rel=1e-12)

    def test_config_fidelity_single_dim(self, rng):
        t, p = smooth_blobs(3, 6), smooth_blobs(4, 6)
        rep = topological_loss(t, p, LossConfig(dims=(2,), m=None))
        assert set(rep.per_dim) == {2}

    def test_dims_mismatch(self):
        with pytest.raises(SizeMismatch):
            topological_loss(Volume(np.zeros((3, 3, 3))), Volume(np.zeros((4, 3, 3))))

    def test_downsampling_changes_working_grid(self):
        t, p = smooth_blobs(5, 12), smooth_blobs(6, 12)
        rep_full = topological_loss(t, p, LossConfig(m=None))
        rep_small = topological_loss(t, p, LossConfig(m=6))
        assert rep_small.gradient.dims == (12, 12, 12)
        assert rep_full.topological != rep_small.topological


class TestGradient:
    def test_identity_gradient_is_total_persistence_gradient(self):
        v = Volume(np.array([[[1.0]], [[0.2]], [[0.8]]]))
        cfg = LossConfig(p=2.0, dims=(0,), m=None)
        grad = topological_loss_gradient(v, v, cfg)
        # pairs (1.0, 0.0) essential and (0.8, 0.2): +2(b-d) at births,
        # -2(b-d) at the finite death
        assert grad.data.ravel().tolist() == pytest.approx([2.0, -1.2, 1.2], abs=1e-12)

    def test_constant_zero_prediction_has_zero_gradient(self):
        z = Volume(np.zeros((3, 3, 3)))
        t = Volume(np.zeros((3, 3, 3)))
        grad = topological_loss_gradient(t, z, LossConfig(dims=(0,), m=None))
        assert not grad.data.any()

    @pytest.mark.parametrize("dims", [(0,), (2,), (0, 1, 2)])
    @pytest.mark.parametrize("m", [None, 4])
    def test_matches_central_differences(self, dims, m):
        f_true, f_pred = generic_pair(1, 5)
        cfg = LossConfig(p=2.0, dims=dims, m=m)
        grad = topological_loss(f_true, f_pred, cfg).gradient.data
        fd = fd_gradient(f_true, f_pred.data, cfg)
        rel = np.abs(grad - fd) / np.maximum(1.0, np.abs(fd))
        assert rel.max() <= 1e-4

    def test_descent_decreases_loss(self):
        # gradient steps (base 1e-2, clamped to [0,1]) with backtracking;
        # the sequence must be monotone except where the line search fails
        cfg = LossConfig(p=2.0, dims=(0, 1, 2), m=None)
        target = smooth_blobs(31, 8, k=4, amp=0.55)
        x = smooth_blobs(32, 8, k=6, amp=0.95).data.copy()
        current = topological_loss(target, Volume(x), cfg)
        start = current.topological
        failures = 0
        for _ in range(200):
            step = 1e-2
            accepted = False
            for _ in range(8):
                cand = np.clip(x - step * current.gradient.data, 0.0, 1.0)
                rep = topological_loss(target, Volume(cand), cfg)
                if rep.topological <= current.topological + 1e-12:
                    x, current = cand, rep
                    accepted = True
                    break
                step /= 2
            if not accepted:
                failures += 1
                x = np.clip(x - 1e-2 * current.gradient.data, 0.0, 1.0)
                current = topological_loss(target, Volume(x), cfg)
        assert failures / 200 < 0.05
        assert current.topological < start


class TestStabilityBound:
    def test_bottleneck_bound_and_wasserstein_ratio(self):
        rng = np.random.default_rng(77)
        ratios = []
        for _ in range(10):
            f = smooth_blobs(int(rng.integers(1 << 30)), 6)
            g = Volume(np.clip(f.data + rng.uniform(-0.05, 0.05, f.dims), 0, 1))
            df, dg = diagrams_of(f), diagrams_of(g)
            sup = p_norm_diff(f, g, np.inf)
            two = p_norm_diff(f, g, 2.0)
            for k in range(3):
                assert bottleneck(df[k], dg[k]) <= sup + 1e-12
                from topocube import wasserstein

                ratios.append(wasserstein(df[k], dg[k], 2.0)[0] / two)
        observed_c = max(ratios)
        assert np.isfinite(observed_c)
        assert all(r <= observed_c for r in ratios)


class TestGeometricLosses:
    def test_bce_perfect_binary_prediction(self):
        y = np.zeros((3, 3, 3))
        y[0] = 1.0
        value, _ = bce_loss(Volume(y), Volume(y))
        assert value == pytest.approx(-np.log(1 - 1e-7), rel=1e-6)

    def test_bce_half_prediction(self):
        ones = Volume(np.ones((3, 3, 3)))
        half = Volume(np.full((3, 3, 3), 0.5))
        value, _ = bce_loss(ones, half)
        assert value == pytest.approx(np.log(2), rel=1e-12)

    def test_bce_matches_direct_sum(self, rng):
        y = Volume(rng.random((4, 4, 4)))
        yp = Volume(rng.uniform(0.05, 0.95, (4, 4, 4)))
        value, _ = bce_loss(y, yp)
        direct = -np.mean(
            y.data * np.log(yp.data) + (1 - y.data) * np.log(1 - yp.data)
        )
        assert value == pytest.approx(direct, rel=1e-12)

    def test_bce_range_check(self):
        with pytest.raises(InvalidValue):
            bce_loss(Volume(np.full((2, 2, 2), 2.0), value_range=None), Volume(np.zeros((2, 2, 2))))

    def test_bce_gradient_matches_fd(self, rng):
        y = Volume((rng.random((3, 3, 3)) > 0.5).astype(float))
        x = rng.uniform(0.1, 0.9, (3, 3, 3))
        _, grad = bce_loss(y, Volume(x))
        h = 1e-6
        fd = np.zeros_like(x)
        for i in np.ndindex(x.shape):
            up, down = x.copy(), x.copy()
            up[i] += h
            down[i] -= h
            fd[i] = (bce_loss(y, Volume(up))[0] - bce_loss(y, Volume(down))[0]) / (2 * h)
        assert np.abs(grad.data - fd).max() / max(1.0, np.abs(fd).max()) <= 1e-4

    def test_dice_perfect_overlap(self):
        ones = Volume(np.ones((4, 4, 4)))
        n = ones.size
        value, _ = dice_loss(ones, ones)
        assert value == pytest.approx(1 - 2 * n / (2 * n + 1), rel=1e-12)

    def test_dice_disjoint(self):
        a = np.zeros((4, 4, 4))
        a[0] = 1.0
        b = np.zeros((4, 4, 4))
        b[2] = 1.0
        value, _ = dice_loss(Volume(a), Volume(b))
        # no overlap: the loss is exactly 1 under the unsmoothed numerator
        assert value == 1.0

    def test_dice_gradient_matches_fd(self, rng):
        y = Volume((rng.random((3, 3, 3)) > 0.5).astype(float))
        x = rng.uniform(0.1, 0.9, (3, 3, 3))
        _, grad = dice_loss(y, Volume(x))
        h = 1e-6
        fd = np.zeros_like(x)
        for i in np.ndindex(x.shape):
            up, down = x.copy(), x.copy()
            up[i] += h
            down[i] -= h
            fd[i] = (dice_loss(y, Volume(up))[0] - dice_loss(y, Volume(down))[0]) / (2 * h)
        rel = np.abs(grad.data - fd) / np.maximum(np.abs(fd), 1e-8)
        assert rel.max() <= 1e-4
