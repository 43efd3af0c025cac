import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ruelle import potential as pt
from ruelle import shift as sh
from ruelle import transfer as tr
from ruelle.errors import DepthTooLarge, HypothesisViolated
from oracles import table_dict, transfer_from_dict

GOLDEN_ROOT = (1 + math.sqrt(5)) / 2
SHIFTS = [sh.full_shift(2), sh.golden_mean(), sh.TransitionStructure.from_rows([[1, 1, 0], [0, 0, 1], [1, 0, 0]]),
          sh.TransitionStructure.from_rows([[1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 0, 1], [1, 1, 1, 0]])]
seeds = st.integers(0, 2**32 - 1)
shifts = st.sampled_from(SHIFTS)


def random_table(shift, depth, seed, real=False):
    return pt.TabulatedFunction.random(shift, depth, np.random.default_rng(seed), real=real)


def nonzero_spectrum(f, depth=None):
    return tr.spectrum(tr.build_matrix(f, depth=depth))


class TestBuildMatrix:
    def test_depth_one_pair(self, full2):
        a, b = 0.2, -0.7
        M = tr.build_matrix(pt.TabulatedFunction(full2, 1, [a, b])).matrix
        np.testing.assert_allclose(M, [[math.exp(a), math.exp(b)], [math.exp(a), math.exp(b)]])
        spec = tr.spectrum_of_array(M)
        assert spec.eigenvalues == pytest.approx([math.exp(a) + math.exp(b)])
        assert spec.zero_count == 1

    def test_zero_potential_full2(self, full2):
        tm = tr.build_matrix(pt.TabulatedFunction.constant(full2, 0.0, 1))
        np.testing.assert_array_equal(tm.matrix, np.ones((2, 2)))

    def test_zero_potential_golden_is_transpose(self, golden):
        tm = tr.build_matrix(pt.TabulatedFunction.constant(golden, 0.0, 1))
        np.testing.assert_array_equal(tm.matrix, golden.matrix.T)
        spec = tr.spectrum(tm)
        np.testing.assert_allclose(spec.eigenvalues, [GOLDEN_ROOT, -1 / GOLDEN_ROOT], atol=1e-14)

    def test_real_potential_gives_real_matrix(self, golden, rng):
        f = pt.TabulatedFunction.random(golden, 2, rng, real=True)
        assert tr.build_matrix(f).matrix.dtype == float

    def test_shallow_basis_refused(self, full2, rng):
        with pytest.raises(ValueError):
            tr.build_matrix(pt.TabulatedFunction.random(full2, 4, rng), depth=2)

    def test_cap(self, full2):
        with pytest.raises(DepthTooLarge):
            tr.build_matrix(pt.TabulatedFunction.constant(full2, 0.0, 1), depth=6, cap=32)

    @given(seeds, st.integers(0, 3), st.integers(0, 2), shifts)
    def test_matches_pointwise_definition(self, seed, depth, extra, shift):
        f = random_table(shift, depth, seed)
        d = tr.basis_depth_for(depth) + extra
        tm = tr.build_matrix(f, depth=d)
        _, _, M = transfer_from_dict(shift.matrix.tolist(), table_dict(f), depth, d)
        np.testing.assert_allclose(tm.matrix, M, rtol=1e-14)

    @given(seeds, st.integers(1, 3), shifts)
    def test_sparsity_pattern(self, seed, depth, shift):
        tm = tr.build_matrix(random_table(shift, depth, seed), depth=3)
        words = tm.basis
        for row, w in enumerate(words):
            for col, v in enumerate(words):
                linked = np.array_equal(v[1:], w[:-1]) and shift.matrix[v[0], w[0]] == 1
                assert (tm.matrix[row, col] != 0) == linked


class TestApply:
    def test_zero_on_one(self, full2):
        zero = pt.TabulatedFunction.constant(full2, 0.0, 1)
        out = tr.apply(zero, pt.TabulatedFunction.constant(full2, 1.0, 1))
        np.testing.assert_array_equal(out.table, [2, 2])

    def test_golden_indicator(self, golden):
        zero = pt.TabulatedFunction.constant(golden, 0.0, 1)
        out = tr.apply(zero, pt.TabulatedFunction.indicator(golden, (1,)))
        np.testing.assert_array_equal(out.table, [1, 0])

    @given(seeds, st.integers(1, 3), shifts)
    def test_columns_are_images_of_indicators(self, seed, depth, shift):
        f = random_table(shift, depth, seed)
        tm = tr.build_matrix(f)
        for col, w in enumerate(tm.basis):
            image = tr.apply(f, pt.TabulatedFunction.indicator(shift, tuple(w), tm.depth))
            np.testing.assert_allclose(image.lift(tm.depth).table, tm.matrix[:, col], rtol=1e-14)

    def test_pointwise_image_agrees_with_table(self, golden, rng):
        f = pt.TabulatedFunction.random(golden, 2, rng)
        phi = pt.TabulatedFunction.random(golden, 3, rng)
        table = tr.apply(f, phi)
        lazy = tr.TransferImage(golden, f, phi)
        words = sh.complete_words(golden, sh.enumerate_words(golden, 4), 6)
        np.testing.assert_allclose(lazy.values(words), table.values(words), rtol=1e-14)


class TestSpectrum:
    def test_full2_depth2(self, full2):
        spec = nonzero_spectrum(pt.TabulatedFunction.constant(full2, 0.0, 1), depth=2)
        assert spec.eigenvalues == pytest.approx([2.0])
        assert list(spec.multiplicities) == [1] and spec.zero_count == 3

    def test_clustering(self):
        spec = tr.spectrum_of_array(np.diag([3.0, 3.0, 1.0]))
        assert list(spec.multiplicities) == [2, 1]
        assert spec.eigenvalues == pytest.approx([3, 1])

    def test_nilpotent_block_is_zero(self):
        J = np.diag(np.ones(7), 1)
        spec = tr.spectrum_of_array(J)
        assert spec.eigenvalues.size == 0 and spec.zero_count == 8

    @given(seeds, st.integers(1, 3), shifts)
    def test_ordering_and_count(self, seed, depth, shift):
        spec = nonzero_spectrum(random_table(shift, depth, seed), depth=3)
        mods = np.abs(spec.eigenvalues)
        assert (np.diff(mods) <= 1e-12 * mods.max()).all()
        assert spec.dim == sh.word_count(shift, 3)

    @given(seeds, st.integers(1, 3), shifts)
    def test_depth_stability(self, seed, m, shift):
        f = random_table(shift, m, seed)
        ref = nonzero_spectrum(f)
        for d in range(max(m - 1, 1), m + 4):
            spec = nonzero_spectrum(f, depth=d)
            assert list(spec.multiplicities) == list(ref.multiplicities)
            np.testing.assert_allclose(spec.eigenvalues, ref.eigenvalues, rtol=1e-8)

    @given(seeds, st.integers(1, 3), shifts)
    def test_perron_property(self, seed, depth, shift):
        tm = tr.build_matrix(random_table(shift, depth, seed, real=True))
        spec = tr.spectrum(tm)
        lead = spec.leading
        assert abs(lead.imag) < 1e-12 and lead.real > 0 and spec.multiplicities[0] == 1
        if spec.eigenvalues.size > 1:
            assert abs(spec.eigenvalues[1]) < lead.real * (1 - 1e-9)
        w, V = np.linalg.eig(tm.matrix)
        v = V[:, np.argmax(w.real)]
        v = v / v[np.argmax(np.abs(v))]
        assert v.real.min() > 0

    @given(seeds, st.integers(1, 3), st.integers(1, 8), shifts)
    def test_power_sum_is_trace(self, seed, depth, q, shift):
        tm = tr.build_matrix(random_table(shift, depth, seed))
        spec = tr.spectrum(tm)
        tr_q = tm.power_trace(q)
        assert abs(spec.power_sum(q) - tr_q) <= 1e-10 * max(abs(tr_q), 1)


class TestPressure:
    def test_zero_is_entropy(self, any_shift):
        p = tr.pressure(pt.ConstantPotential(0.0), any_shift, 2)
        assert p.value == pytest.approx(sh.topological_entropy(any_shift), abs=1e-10)

    def test_constant_shift(self, golden):
        p = tr.pressure(pt.ConstantPotential(0.4), golden, 2)
        assert p.value == pytest.approx(sh.topological_entropy(golden) + 0.4, abs=1e-12)
        assert p.lower == p.upper == p.value

    def test_depth_one_pair(self, full2):
        a, b = 0.1, -0.3
        p = tr.pressure(pt.TabulatedFunction(full2, 1, [a, b]), full2, 1)
        assert p.value == pytest.approx(math.log(math.exp(a) + math.exp(b)), abs=1e-14)

    def test_geometric_bracket_shrinks(self, full2):
        f = pt.GeometricPotential(0.5)
        results = [tr.pressure(f, full2, m) for m in (2, 4, 6)]
        widths = [r.upper - r.lower for r in results]
        assert widths[0] > widths[1] > widths[2]
        assert results[1].lower <= results[2].value <= results[1].upper

    def test_complex_refused(self, full2, rng):
        with pytest.raises(ValueError):
            tr.pressure(pt.TabulatedFunction.random(full2, 1, rng), full2, 1)


class TestLasotaYorke:
    def test_zero_potential(self, full2, rng):
        phi = pt.TabulatedFunction.random(full2, 4, rng)
        zero = pt.TabulatedFunction.constant(full2, 0.0, 1)
        for k in range(1, 4):
            rep = tr.lasota_yorke_check(zero, phi, k, full2)
            assert rep.measured == tr.apply(zero, phi).var(k)
            assert rep.bound == pytest.approx(2 * phi.var(k + 1))
            assert rep.satisfied

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_geometric_against_indicator(self, full2, k):
        rep = tr.lasota_yorke_check(pt.GeometricPotential(0.5), pt.TabulatedFunction.indicator(full2, (0, 1)), k, full2)
        assert rep.satisfied

    @given(seeds, st.integers(1, 3), st.integers(1, 5), st.integers(1, 4), shifts)
    def test_random_tables(self, seed, fd, pd, k, shift):
        rng = np.random.default_rng(seed)
        f = pt.TabulatedFunction.random(shift, fd, rng)
        phi = pt.TabulatedFunction.random(shift, pd, rng)
        assert tr.lasota_yorke_check(f, phi, k, shift).satisfied


class TestOperatorBounds:
    def test_remainder_and_rank(self, full2):
        theta = pt.ThetaProfile.from_geometric(1.0, 0.5)
        c = pt.closed_form_constants(2, 0.5, 1.0, 1.0)
        one = tr.operator_bounds(c, theta, 3, 1, full2)
        two = tr.operator_bounds(c, theta, 3, 2, full2)
        assert one["finite_rank_remainder"] == pytest.approx(c.C2 / 16)
        assert two["finite_rank_remainder"] == pytest.approx((c.C2 * theta(4)) ** 2)
        assert two["rank"] == 16

    def test_refuses_large_profile(self, full2):
        theta = pt.ThetaProfile.from_geometric(40.0, 0.5)
        with pytest.raises(HypothesisViolated):
            tr.operator_bounds(pt.closed_form_constants(2, 20, 1.0, 1.0), theta, 2, 1, full2)
