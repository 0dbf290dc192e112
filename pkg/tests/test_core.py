import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import complexes, small_states
from coherent_ecp.core import (
    BranchTerm,
    CoherentSuperposition,
    DegenerateStateError,
    InvalidArgumentError,
    ShapeError,
    ToleranceConfig,
    canonicalize,
    fidelity,
    gram_matrix,
    inner_product,
    mode_overlap,
    norm_squared,
    normalize,
    tensor_product,
)
from coherent_ecp import protocols


def single(label, amp, coeff=1.0):
    return CoherentSuperposition([label], [coeff], [[amp]])


class TestModeOverlap:
    def test_identical(self):
        assert mode_overlap(1.3 - 0.2j, 1.3 - 0.2j) == pytest.approx(1.0, abs=1e-15)

    def test_opposite_unit(self):
        assert mode_overlap(1.0, -1.0) == pytest.approx(math.exp(-2), abs=1e-15)

    def test_vacuum_vs_sqrt2(self):
        assert mode_overlap(0, math.sqrt(2)) == pytest.approx(math.exp(-1), abs=1e-15)

    @pytest.mark.parametrize("u,v", [(0.7, -0.7), (1 + 1j, 0.5 - 2j), (0, 2.5), (-1.2j, 0.3)])
    def test_matches_number_basis(self, u, v):
        assert mode_overlap(u, v) == pytest.approx(oracles.fock_overlap(u, v), abs=1e-12)

    @given(complexes, complexes)
    def test_bounded(self, u, v):
        assert abs(mode_overlap(u, v)) <= 1 + 1e-15

    @pytest.mark.parametrize("bad", [math.nan, math.inf, complex(0, math.inf)])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(InvalidArgumentError):
            mode_overlap(bad, 0)


class TestInnerProduct:
    def test_single_mode_reduces_to_overlap(self):
        assert inner_product(single("a", 1.0), single("a", -1.0)) == pytest.approx(math.exp(-2))

    def test_empty_state(self):
        empty = CoherentSuperposition(["a"], [], np.zeros((0, 1)))
        assert inner_product(empty, single("a", 1.0)) == 0

    def test_mode_count_mismatch(self):
        with pytest.raises(ShapeError):
            inner_product(single("a", 1.0), tensor_product(single("a", 1.0), single("b", 0.0)))

    def test_normalized_partial_state(self):
        state = protocols.build_partial_ecp1(protocols.Ecp1Params(0.8, 0.3, -0.9))
        assert inner_product(state, state) == pytest.approx(1.0, abs=1e-12)

    @given(small_states(n_modes=3), small_states(n_modes=3))
    def test_hermitian(self, x, y):
        assert inner_product(x, y) == pytest.approx(np.conj(inner_product(y, x)), abs=1e-12)

    @given(small_states(n_modes=2), small_states(n_modes=2))
    def test_cauchy_schwarz(self, x, y):
        assert abs(inner_product(x, y)) ** 2 <= norm_squared(x) * norm_squared(y) + 1e-10

    @given(small_states(n_modes=2), small_states(n_modes=2), complexes)
    def test_linear_in_rhs_antilinear_in_lhs(self, x, y, z):
        assert inner_product(x, y.scaled(z)) == pytest.approx(z * inner_product(x, y), abs=1e-10)
        assert inner_product(x.scaled(z), y) == pytest.approx(np.conj(z) * inner_product(x, y), abs=1e-10)

    def test_against_number_basis(self, rng):
        for _ in range(5):
            x = CoherentSuperposition(["p", "q"], rng.normal(size=3), rng.normal(size=(3, 2)))
            y = CoherentSuperposition(["p", "q"], rng.normal(size=4), rng.normal(size=(4, 2)) * 1j)
            ref = oracles.brute_inner(x.coefficients, x.amplitudes, y.coefficients, y.amplitudes)
            assert inner_product(x, y) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=60)
@given(st.lists(complexes, min_size=1, max_size=6), st.data())
def test_gram_kernel_positive(amps, data):
    coeffs = data.draw(st.lists(complexes, min_size=len(amps), max_size=len(amps)))
    state = CoherentSuperposition(["x"], coeffs, [[a] for a in amps])
    assert norm_squared(state) >= -1e-10
    eig = np.linalg.eigvalsh(gram_matrix(state, state))
    assert eig.min() >= -1e-10


class TestNorm:
    def test_ancilla_unnormalized(self):
        b = 1 / math.sqrt(2)
        state = protocols.build_ancilla_single(protocols.Ecp1Params(1.0, b, b), normalized=False)
        assert norm_squared(state) == pytest.approx(1 + math.exp(-2), abs=1e-14)

    def test_single_term_coefficient_two(self):
        assert norm_squared(single("a", 0.4j, coeff=2.0)) == pytest.approx(4.0)

    def test_two_mode_ancilla_normalized(self):
        q = protocols.Ecp2Params(0.7, 0.4, -0.1, 0.8, 0.3)
        assert norm_squared(protocols.build_ancilla_two_mode(q)) == pytest.approx(1.0, abs=1e-12)

    @given(small_states())
    def test_normalize(self, s):
        if norm_squared(s) <= 1e-12:
            with pytest.raises(DegenerateStateError):
                normalize(s)
        else:
            assert norm_squared(normalize(s)) == pytest.approx(1.0, abs=1e-12)

    def test_normalize_empty(self):
        with pytest.raises(DegenerateStateError):
            normalize(CoherentSuperposition(["a"], [], np.zeros((0, 1))))


class TestCanonicalize:
    def test_merge(self):
        s = CoherentSuperposition.from_terms(["a"], [(0.3, [1.5]), (0.7, [1.5])])
        c = canonicalize(s)
        assert c.terms == (BranchTerm(1.0 + 0j, (1.5 + 0j,)),)

    def test_drop_tiny(self):
        assert canonicalize(single("a", 1.5, coeff=1e-15)).n_terms == 0

    def test_merge_within_tolerance(self):
        s = CoherentSuperposition.from_terms(["a"], [(1, [1.0]), (1, [1.0 + 1e-12])])
        assert canonicalize(s).n_terms == 1
        s = CoherentSuperposition.from_terms(["a"], [(1, [1.0]), (1, [1.0 + 1e-6])])
        assert canonicalize(s).n_terms == 2

    def test_cancellation_drops(self):
        s = CoherentSuperposition.from_terms(["a", "b"], [(0.5, [1, 2]), (-0.5, [1, 2]), (1, [0, 0])])
        assert canonicalize(s).n_terms == 1

    def test_lexicographic_order(self):
        s = CoherentSuperposition.from_terms(
            ["a", "b"], [(1, [1, -1]), (2, [-1, 1]), (3, [1, -2]), (4, [-1, 0.5j])]
        )
        rows = [tuple((z.real, z.imag) for z in t.amplitudes) for t in canonicalize(s).terms]
        assert rows == sorted(rows)

    def test_combined_ecp1_term_count(self):
        p = protocols.Ecp1Params(1.0, 0.6, 0.8)
        combined = tensor_product(protocols.build_partial_ecp1(p), protocols.build_ancilla_single(p))
        assert canonicalize(combined).n_terms == 8

    @given(small_states())
    def test_idempotent_and_inner_product_preserving(self, s):
        once = canonicalize(s)
        twice = canonicalize(once)
        assert once.terms == twice.terms
        probe = CoherentSuperposition(s.mode_labels, [1.0, -0.5j], np.ones((2, s.n_modes)) * [[0.3], [-0.7]])
        assert inner_product(probe, once) == pytest.approx(inner_product(probe, s), abs=1e-10)

    def test_tolerance_config_validation(self):
        with pytest.raises(InvalidArgumentError):
            ToleranceConfig(amp_merge_tol=0)
        assert ToleranceConfig() == ToleranceConfig(1e-9, 1e-12)


class TestTensorProduct:
    def test_ecp1_counts(self):
        p = protocols.Ecp1Params(1.0, 0.6, 0.8)
        s = tensor_product(protocols.build_partial_ecp1(p), protocols.build_ancilla_single(p))
        assert (s.n_terms, s.n_modes) == (8, 5)

    def test_ecp2_counts(self):
        q = protocols.Ecp2Params(1.0, 0.1, 0.2, 0.3, 0.4)
        s = tensor_product(
            tensor_product(protocols.build_partial_ecp2(q), protocols.build_ancilla_two_mode(q)),
            protocols.build_ancilla_g(q),
        )
        assert (s.n_terms, s.n_modes) == (32, 7)

    def test_with_vacuum(self):
        p = protocols.Ecp1Params(1.0, 0.6, 0.8)
        s = tensor_product(protocols.build_partial_ecp1(p), CoherentSuperposition.vacuum("z"))
        assert (s.n_terms, s.n_modes) == (4, 5)

    def test_duplicate_labels(self):
        with pytest.raises(ShapeError):
            tensor_product(single("a", 1), single("a", 0))

    @given(small_states(n_modes=2, max_terms=4), small_states(n_modes=1, max_terms=4))
    def test_norm_multiplies(self, x, y):
        y = y.relabeled(["other"])
        prod = tensor_product(x, y)
        assert norm_squared(prod) == pytest.approx(norm_squared(x) * norm_squared(y), abs=1e-10, rel=1e-10)


class TestFidelity:
    def test_self(self):
        s = protocols.build_partial_ecp1(protocols.Ecp1Params(0.5, 0.2, 0.9))
        assert fidelity(s, s) == pytest.approx(1.0, abs=1e-12)

    def test_near_orthogonal(self):
        assert fidelity(single("a", 6.0), single("a", -6.0)) < 1e-30

    def test_scale_invariant(self):
        s = protocols.build_partial_ecp1(protocols.Ecp1Params(0.5, 0.2, 0.9))
        t = protocols.build_target_mes(0.5)
        assert fidelity(s.scaled(3j), t.scaled(0.1)) == pytest.approx(fidelity(s, t), rel=1e-12)

    def test_zero_norm(self):
        empty = CoherentSuperposition(["a"], [], np.zeros((0, 1)))
        with pytest.raises(DegenerateStateError):
            fidelity(empty, single("a", 1.0))

    @given(small_states(n_modes=2), small_states(n_modes=2))
    def test_bounded(self, x, y):
        if norm_squared(x) > 1e-9 and norm_squared(y) > 1e-9:
            assert -1e-12 <= fidelity(x, y) <= 1 + 1e-10


def test_state_is_immutable():
    s = single("a", 1.0)
    with pytest.raises(ValueError):
        s.coefficients[0] = 2.0


def test_state_rejects_duplicate_labels():
    with pytest.raises(ShapeError):
        CoherentSuperposition(["a", "a"], [1.0], [[0, 0]])
