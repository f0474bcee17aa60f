import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpdomains.cpmaps import (
    DegenerateDilationError,
    NotCompletelyPositiveError,
    UnitalFallbackWarning,
    apply,
    choi_rank,
    from_action,
    from_choi,
    from_kraus,
    is_completely_positive,
    is_contractive,
    is_pure,
    is_unital,
    minimal_stinespring,
    norm,
    random_cpmap,
)
from cpdomains.fixtures import ex_a, ex_b, ex_id, ex_tr, ex_zero, get_fixture
from cpdomains.numerics import InvalidInputError

from conftest import E, units


def test_choi_of_corner_map():
    expected = np.kron(E(0, 0, 2), E(0, 0, 2))
    assert np.allclose(ex_a().choi, expected)
    assert choi_rank(ex_a()) == 1


def test_choi_of_identity_channel():
    expected = sum(np.kron(E(i, j, 3), E(i, j, 3)) for i in range(3) for j in range(3))
    assert np.allclose(ex_id(3).choi, expected)
    assert choi_rank(ex_id(3)) == 1


def test_choi_of_doubled_corner_map():
    assert np.allclose(ex_b().choi, 2 * np.kron(E(0, 0, 2), E(0, 0, 2)))


def test_apply_examples():
    a = np.array([[1 + 2j, 3], [4, 5]])
    assert np.allclose(apply(ex_a(), a), np.diag([1 + 2j, 0]))
    assert np.allclose(apply(ex_b(), np.eye(2)), np.diag([2, 0]))
    assert np.allclose(apply(ex_zero(), a), 0)
    assert np.allclose(apply(ex_tr(), a), (3 + 1j) * np.eye(2))


def test_apply_rejects_wrong_shape():
    with pytest.raises(InvalidInputError):
        apply(ex_a(), np.eye(3))


def test_predicates_on_fixtures():
    a, b, i2 = ex_a(), ex_b(), ex_id(2)
    assert is_completely_positive(a) and not is_unital(a) and is_contractive(a)
    assert is_completely_positive(b) and not is_contractive(b)
    assert norm(b) == pytest.approx(2.0)
    assert is_completely_positive(i2) and is_unital(i2) and is_contractive(i2)


def test_not_completely_positive_is_rejected():
    # transpose map on M_2: Choi is the swap, eigenvalue -1
    swap = sum(np.kron(E(i, j, 2), E(j, i, 2)) for i in range(2) for j in range(2))
    assert not is_completely_positive(swap)
    with pytest.raises(NotCompletelyPositiveError) as info:
        from_choi(2, 2, swap)
    assert info.value.eigenvalue == pytest.approx(-1.0)


def test_non_hermitian_choi_is_invalid():
    c = np.zeros((4, 4))
    c[0, 1] = 1
    with pytest.raises(InvalidInputError):
        from_choi(2, 2, c)


def test_constructor_agreement():
    rng = np.random.default_rng(2)
    K = rng.standard_normal((3, 2, 3)) + 1j * rng.standard_normal((3, 2, 3))
    phi = from_kraus(K)
    images = [sum(k @ e @ k.conj().T for k in K) for e in units(3)]
    assert np.allclose(from_action(images).choi, phi.choi)
    assert np.allclose(from_choi(3, 2, phi.choi).choi, phi.choi)


def test_from_action_needs_square_count():
    with pytest.raises(InvalidInputError):
        from_action([np.eye(2)] * 3)


# dilation


def test_corner_map_dilation():
    d = minimal_stinespring(ex_a())
    assert d.r == 1
    assert np.allclose(d.kraus[0], E(0, 0, 2))
    assert np.allclose(d.V, E(0, 0, 2))
    assert d.minimality_dimension() == 2


def test_identity_dilation_is_isometric():
    d = minimal_stinespring(ex_id(2))
    assert d.r == 1
    assert np.allclose(d.V.conj().T @ d.V, np.eye(2))
    assert np.allclose(d.kraus[0] @ d.kraus[0].conj().T, np.eye(2))


def test_depolarizing_dilation_has_full_rank():
    d = minimal_stinespring(ex_tr())
    assert d.r == 4
    assert d.minimality_dimension() == 8
    assert d.reconstruction_residual(ex_tr()) < 1e-12


def test_zero_map_has_no_dilation():
    with pytest.raises(DegenerateDilationError):
        minimal_stinespring(ex_zero())


def test_unknown_order():
    with pytest.raises(InvalidInputError):
        minimal_stinespring(ex_a(), order="sideways")


@settings(deadline=None, max_examples=40)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1), st.sampled_from(["raw", "contractive", "unital"]))
def test_dilation_contract(n, h, seed, normalization):
    rng = np.random.default_rng(seed)
    rank = int(rng.integers(1, n * h + 1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnitalFallbackWarning)
        phi = random_cpmap(n, h, rank, normalization, seed)
    scale = max(1.0, norm(phi))
    for order in ("descending", "ascending"):
        d = minimal_stinespring(phi, order=order)
        assert d.r == rank == choi_rank(phi)
        assert d.reconstruction_residual(phi) < 1e-10 * scale
        assert d.kraus_residual(phi) < 1e-10 * scale
        assert d.minimality_dimension() == n * rank
        if is_unital(phi):
            assert np.linalg.norm(d.V.conj().T @ d.V - np.eye(h), 2) < 1e-10


def test_orderings_differ_by_ancilla_permutation():
    phi = random_cpmap(2, 3, 3, "raw", 4)
    d1 = minimal_stinespring(phi, order="descending")
    d2 = minimal_stinespring(phi, order="ascending")
    assert np.allclose(d1.kraus[::-1], d2.kraus)


# random maps


def test_random_rank_one_contractive():
    phi = random_cpmap(2, 2, 1, "contractive", 7)
    assert choi_rank(phi) == 1
    assert norm(phi) == pytest.approx(1.0)


def test_random_scalar_map():
    phi = random_cpmap(1, 1, 1, "raw", 0)
    c = apply(phi, np.eye(1))[0, 0]
    assert c.real >= 0 and abs(c.imag) < 1e-15
    assert np.allclose(apply(phi, np.array([[3.0]])), 3 * c)


def test_random_is_deterministic():
    a = random_cpmap(3, 2, 4, "unital", 11)
    b = random_cpmap(3, 2, 4, "unital", 11)
    assert np.array_equal(a.choi, b.choi)
    assert is_unital(a)


def test_unital_fallback_is_flagged():
    # phi(I) = K K^* has rank <= n = 1 < h
    with pytest.warns(UnitalFallbackWarning):
        phi = random_cpmap(1, 3, 1, "unital", 0)
    assert norm(phi) == pytest.approx(1.0)
    assert not is_unital(phi)


def test_random_rank_range():
    with pytest.raises(InvalidInputError):
        random_cpmap(2, 2, 5)
    with pytest.raises(InvalidInputError):
        random_cpmap(2, 2, 0)
    with pytest.raises(InvalidInputError):
        random_cpmap(2, 2, 1, "normalized")


def test_purity():
    assert is_pure(ex_a())
    assert not is_pure(ex_tr())
    assert is_pure(ex_id(3))


def test_fixture_lookup():
    assert get_fixture("ex-id", 3).n == 3
    with pytest.raises(InvalidInputError):
        get_fixture("EX-Q")
