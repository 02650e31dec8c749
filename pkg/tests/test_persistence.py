import numpy as np
import pytest

from topocube import (
    TooLarge,
    Volume,
    betti_numbers,
    bottleneck,
    build_superlevel_filtration,
    compute_persistence,
    diagrams_of,
    naive_reduce,
    p_norm_diff,
)
from topocube.persistence import available_engines

from conftest import smooth_blobs

ENGINES = available_engines()


def multisets(diagrams):
    return [sorted(zip(d.births.tolist(), d.deaths.tolist())) for d in diagrams]


class TestFixtures:
    def test_single_voxel(self):
        dgs = diagrams_of(Volume(np.full((1, 1, 1), 0.7)))
        assert multisets(dgs) == [[(0.7, 0.0)], [], []]
        assert dgs[0].essential.all()

    def test_three_voxel_merge(self):
        dgs = diagrams_of(Volume(np.array([[[1.0]], [[0.2]], [[0.8]]])))
        assert multisets(dgs) == [[(0.8, 0.2), (1.0, 0.0)], [], []]
        ess = {
            (b, d)
            for b, d, e in zip(dgs[0].births, dgs[0].deaths, dgs[0].essential)
            if e
        }
        assert ess == {(1.0, 0.0)}

    def test_hollow_shell_cavity(self):
        data = np.zeros((5, 5, 5))
        data[1:4, 1:4, 1:4] = 1.0
        data[2, 2, 2] = 0.0
        dgs = diagrams_of(Volume(data))
        assert multisets(dgs)[2] == [(1.0, 0.0)]

    def test_constant_volume(self):
        dgs = diagrams_of(Volume(np.zeros((3, 3, 3))))
        assert multisets(dgs) == [[(0.0, 0.0)], [], []]
        assert dgs[0].essential.all()

    def test_essential_death_options(self):
        vol = Volume(np.array([[[0.9]], [[0.3]]]), value_range=None)
        default = diagrams_of(vol)  # undeclared range: falls back to data min
        assert multisets(default)[0] == [(0.9, 0.3)]
        forced = diagrams_of(vol, essential_death=0.0)
        assert multisets(forced)[0] == [(0.9, 0.0)]
        as_min = diagrams_of(Volume(np.array([[[0.9]], [[0.3]]])), essential_death="min")
        assert multisets(as_min)[0] == [(0.9, 0.3)]

    def test_provenance_vertices(self):
        dgs = diagrams_of(Volume(np.array([[[1.0]], [[0.2]], [[0.8]]])))
        pairs = {p.birth: p for p in dgs[0].pairs}
        assert pairs[1.0].birth_vertex == (0, 0, 0)
        assert pairs[1.0].death_vertex == (0, 0, 0)  # essential mirrors birth
        assert pairs[1.0].death_cell is None
        assert pairs[0.8].birth_vertex == (2, 0, 0)
        assert pairs[0.8].death_vertex == (1, 0, 0)
        assert pairs[0.8].persistence == pytest.approx(0.6)


class TestOracleEquivalence:
    @pytest.mark.parametrize("engine", ENGINES)
    def test_matches_naive_reduction(self, engine):
        rng = np.random.default_rng(7)
        for _ in range(25):
            side = int(rng.integers(2, 6))
            filt = build_superlevel_filtration(Volume(rng.random((side, side, side))))
            assert multisets(compute_persistence(filt, engine=engine)) == multisets(
                naive_reduce(filt)
            )

    def test_engines_agree_bitwise(self):
        if len(ENGINES) < 2:
            pytest.skip("compiled engine not built")
        rng = np.random.default_rng(11)
        for _ in range(10):
            filt = build_superlevel_filtration(Volume(rng.random((4, 4, 4))))
            a = compute_persistence(filt, engine="compiled")
            b = compute_persistence(filt, engine="python")
            for da, db in zip(a, b):
                assert np.array_equal(da.births, db.births)
                assert np.array_equal(da.deaths, db.deaths)
                assert np.array_equal(da.birth_vertices, db.birth_vertices)
                assert np.array_equal(da.death_vertices, db.death_vertices)
                assert np.array_equal(da.essential, db.essential)

    def test_plateau_volumes(self):
        # heavy ties: binary data
        rng = np.random.default_rng(3)
        for _ in range(10):
            data = (rng.random((4, 4, 4)) > 0.5).astype(np.float64)
            filt = build_superlevel_filtration(Volume(data))
            assert multisets(compute_persistence(filt)) == multisets(naive_reduce(filt))

    def test_naive_refuses_large_input(self):
        filt = build_superlevel_filtration(Volume(np.zeros((2, 2, 2))))
        # simulate an oversized complex without allocating one
        filt.values = np.broadcast_to(0.0, (20**6 + 1,))
        with pytest.raises(TooLarge):
            naive_reduce(filt)


class TestInvariants:
    def test_birth_death_ordering_and_essential_count(self, rng):
        dgs = diagrams_of(Volume(rng.random((5, 5, 5))))
        assert (dgs[0].births >= dgs[0].deaths).all()
        assert int(dgs[0].essential.sum()) == 1
        assert int(dgs[1].essential.sum()) == 0
        assert int(dgs[2].essential.sum()) == 0

    def test_betti_reconstruction_cross_check(self, rng):
        # diagram counting at a threshold equals the Betti numbers
        from oracles import euler_characteristic

        for seed in range(5):
            data = np.random.default_rng(seed).random((4, 4, 4))
            vol = Volume(data)
            for tau in np.random.default_rng(seed + 50).uniform(0, 1, 5):
                b = betti_numbers(vol, float(tau))
                assert b[0] - b[1] + b[2] == euler_characteristic(data, float(tau))

    def test_determinism(self, rng):
        vol = Volume(rng.random((5, 5, 5)))
        filt = build_superlevel_filtration(vol)
        a = compute_persistence(filt)
        b = compute_persistence(build_superlevel_filtration(vol))
        for da, db in zip(a, b):
            assert np.array_equal(da.births, db.births)
            assert np.array_equal(da.birth_vertices, db.birth_vertices)

    def test_bottleneck_stability_under_perturbation(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            f = smooth_blobs(int(rng.integers(1 << 30)), 8)
            noise = rng.uniform(-0.02, 0.02, f.dims)
            g = Volume(np.clip(f.data + noise, 0.0, 1.0))
            eps = p_norm_diff(f, g, np.inf)
            df, dg = diagrams_of(f), diagrams_of(g)
            for k in range(3):
                assert bottleneck(df[k], dg[k]) <= eps + 1e-12
