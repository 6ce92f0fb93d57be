import cmath
import csv
import io
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from sympy import Matrix

from cyclosieve.errors import (
    BadDimension,
    GroupTooLarge,
    MismatchedField,
    NotPrime,
    TrivialCharacter,
    ValidationError,
)
from cyclosieve.matrix_groups import (
    GroupSpec,
    alpha_exponent,
    closed_form_order,
    dim_rank,
    enumerate_group,
    fitted_exponent,
    gauss_sum,
    gauss_sum_max,
    group_elements,
    group_metadata,
    invariant_form,
    is_in_group,
    prob_trace_in,
    sieve_exponent_B,
    sieve_exponent_from_dim,
)
from cyclosieve.ring_formulas import LocalSet, mth_power_set

from oracles import sl2_histogram_bruteforce, squares_with_zero

SMALL_PRIMES = [3, 5, 7, 11, 13]

ENUMERABLE = [
    ("SL", 2, 3), ("SL", 2, 5), ("SL", 2, 7), ("SL", 2, 13), ("SL", 3, 3), ("SL", 3, 5),
    ("GL", 2, 3), ("GL", 2, 5), ("GL", 3, 3),
    ("Sp", 2, 5), ("Sp", 4, 3),
    ("SOodd", 3, 3), ("SOodd", 3, 5), ("SOodd", 3, 7), ("SOodd", 5, 3),
    ("SOplus", 4, 3), ("SOplus", 4, 5), ("SOminus", 4, 3), ("SOminus", 4, 5),
]


# ---------------------------------------------------------------------------
# orders and histograms


def test_order_examples():
    assert enumerate_group(GroupSpec("SL", 2, 3))[0] == 24
    assert enumerate_group(GroupSpec("SL", 2, 5))[0] == 120


@pytest.mark.parametrize("family,n,ell", ENUMERABLE)
def test_order_matches_closed_form(family, n, ell):
    order, hist = enumerate_group(GroupSpec(family, n, ell))
    assert order == closed_form_order(family, n, ell)
    assert hist.total == order


def test_closed_form_orders_by_hand():
    for ell in SMALL_PRIMES:
        assert closed_form_order("SL", 2, ell) == ell * (ell**2 - 1)
        assert closed_form_order("SL", 3, ell) == ell**3 * (ell**3 - 1) * (ell**2 - 1)
        assert closed_form_order("Sp", 4, ell) == ell**4 * (ell**4 - 1) * (ell**2 - 1)
        assert closed_form_order("SOodd", 3, ell) == ell * (ell**2 - 1)
        assert closed_form_order("SOplus", 4, ell) == ell**2 * (ell**2 - 1) ** 2
        assert closed_form_order("SOminus", 4, ell) == ell**2 * (ell**4 - 1)


@pytest.mark.parametrize("ell", [3, 5, 7, 11])
def test_sp2_equals_sl2(ell):
    sl = enumerate_group(GroupSpec("SL", 2, ell))
    sp = enumerate_group(GroupSpec("Sp", 2, ell))
    assert sl[0] == sp[0]
    assert np.array_equal(sl[1].counts, sp[1].counts)


@pytest.mark.parametrize("ell", [3, 5, 7, 11])
def test_sl2_histogram_matches_filtering(ell):
    _, hist = enumerate_group(GroupSpec("SL", 2, ell))
    assert hist.counts.tolist() == sl2_histogram_bruteforce(ell).tolist()


@pytest.mark.parametrize("family,n,ell", [f for f in ENUMERABLE if f[0] != "GL" and f[1] * f[1] * math.log2(f[2]) < 40])
def test_every_element_preserves_the_form(family, n, ell):
    spec = GroupSpec(family, n, ell)
    g = group_elements(spec)
    rng = np.random.default_rng(0)
    for k in rng.choice(len(g), size=min(50, len(g)), replace=False):
        assert is_in_group(spec, g[k])


def test_membership_rejects_outsiders():
    spec = GroupSpec("Sp", 4, 5)
    assert is_in_group(spec, np.eye(4, dtype=int))
    assert is_in_group(spec, -np.eye(4, dtype=int))
    assert not is_in_group(spec, 2 * np.eye(4, dtype=int))
    D = np.diag([2, 3, 1, 1])  # det 1 but not symplectic
    assert not is_in_group(spec, D)
    assert is_in_group(GroupSpec("GL", 2, 5), [[2, 0], [0, 1]])
    assert not is_in_group(GroupSpec("SL", 2, 5), [[2, 0], [0, 1]])


@pytest.mark.parametrize("family,n,ell", [("SL", 3, 3), ("Sp", 4, 3), ("SOminus", 4, 5), ("SOodd", 5, 3)])
def test_trace_is_conjugation_invariant(family, n, ell):
    spec = GroupSpec(family, n, ell)
    g = group_elements(spec)
    rng = np.random.default_rng(1)
    for _ in range(100):
        a, h = g[rng.integers(len(g))], g[rng.integers(len(g))]
        h_inv = np.array(Matrix(h.tolist()).inv_mod(ell), dtype=np.int64)
        conj = h @ a @ h_inv % ell
        assert np.trace(conj) % ell == np.trace(a) % ell
        assert is_in_group(spec, conj)


def test_pinned_forms():
    J = invariant_form("Sp", 4, 7)
    assert np.array_equal((J + J.T) % 7, np.zeros((4, 4)))
    assert np.array_equal(invariant_form("SOodd", 3, 7), np.eye(3))
    Mp = invariant_form("SOplus", 4, 7)
    assert np.array_equal(Mp, Mp.T)
    Mm = invariant_form("SOminus", 4, 7)
    # discriminants differ by a non-square
    dp, dm = round(np.linalg.det(Mp)) % 7, round(np.linalg.det(Mm)) % 7
    assert pow(dp * pow(dm, -1, 7) % 7, 3, 7) == 6
    assert invariant_form("SL", 3, 7) is None


def test_validation():
    for family, n in [("Sp", 3), ("SOplus", 2), ("SOminus", 5), ("SOodd", 4), ("SOodd", 1)]:
        with pytest.raises(BadDimension):
            GroupSpec(family, n, 5)
    with pytest.raises(ValidationError):
        GroupSpec("E8", 8, 5)
    with pytest.raises(ValidationError):
        GroupSpec("SL", 2, 2)
    with pytest.raises(NotPrime):
        GroupSpec("SL", 2, 9)
    with pytest.raises(GroupTooLarge):
        enumerate_group(GroupSpec("SL", 3, 11))
    with pytest.raises(GroupTooLarge):
        enumerate_group(GroupSpec("SL", 2, 13, cap=100))


# ---------------------------------------------------------------------------
# Gaussian sums


def test_gauss_sum_sl2_f3_by_direct_summation():
    ell = 3
    mats = [(a, b, c, d) for a in range(3) for b in range(3) for c in range(3) for d in range(3)
            if (a * d - b * c) % 3 == 1]
    assert len(mats) == 24
    direct = {c: abs(sum(cmath.exp(2j * math.pi * c * (a + d) / ell) for a, b, _, d in mats)) / 24
              for c in (1, 2)}
    value, c = gauss_sum_max(GroupSpec("SL", 2, 3))
    assert value == pytest.approx(max(direct.values()), abs=1e-12)
    assert direct[c] == pytest.approx(value, abs=1e-12)


def test_trivial_character_rejected():
    spec = GroupSpec("SL", 2, 5)
    with pytest.raises(TrivialCharacter):
        gauss_sum(spec, 0)
    with pytest.raises(TrivialCharacter):
        gauss_sum(spec, 5)
    # including c = 0 would give exactly 1
    _, hist = enumerate_group(spec)
    assert hist.counts.sum() / hist.total == 1


@pytest.mark.parametrize("ell", SMALL_PRIMES)
def test_sl2_gauss_sum_scaled_bound(ell):
    value, _ = gauss_sum_max(GroupSpec("SL", 2, ell))
    assert value * ell**1.5 <= 3


# at l = 11 the maximum is 1.738 l^{-3/2}, so the fitted exponent is 1.269
@pytest.mark.parametrize("ell", [
    3, 5, 7,
    pytest.param(11, marks=pytest.mark.xfail(strict=True, reason="small-l constant: exponent 1.269")),
    13,
])
def test_sl2_fitted_exponent(ell):
    value, _ = gauss_sum_max(GroupSpec("SL", 2, ell))
    assert fitted_exponent(value, ell) >= 1.35


def test_fitted_exponent():
    assert fitted_exponent(1 / 125, 5) == pytest.approx(3)
    assert fitted_exponent(0.0, 5) == math.inf


@pytest.mark.parametrize("family,n,ell", [("Sp", 4, 3), ("SOminus", 4, 5), ("SOplus", 4, 5), ("SL", 3, 5)])
def test_gauss_sums_are_small(family, n, ell):
    value, _ = gauss_sum_max(GroupSpec(family, n, ell))
    assert value < 1
    # conjugate character gives the conjugate sum
    spec = GroupSpec(family, n, ell)
    assert gauss_sum(spec, ell - 1) == pytest.approx(gauss_sum(spec, 1).conjugate())


# ---------------------------------------------------------------------------
# exponents


def test_alpha_examples():
    assert alpha_exponent("SL", 2) == Fraction(3, 2)
    assert alpha_exponent("Sp", 2) == 1
    assert alpha_exponent("SOplus", 4) == 1
    assert alpha_exponent("GL", 3) == 3
    assert alpha_exponent("SOodd", 5) == 3
    assert alpha_exponent("SOminus", 4) == alpha_exponent("Sp", 4) == 3
    with pytest.raises(BadDimension):
        alpha_exponent("Sp", 5)


def test_sieve_exponent_examples():
    assert sieve_exponent_B("Sp", 2) == Fraction(9, 2)
    assert sieve_exponent_B("SL", 3) == 10
    assert sieve_exponent_B("SL", 2) == Fraction(9, 2) == sieve_exponent_B("Sp", 2)
    with pytest.raises(ValidationError):
        sieve_exponent_B("GL", 2)
    with pytest.raises(BadDimension):
        sieve_exponent_B("SOplus", 2)


def _all_dims(families):
    out = []
    for family in families:
        for n in range(1, 7):
            try:
                dim_rank(family, n)
            except BadDimension:
                continue
            out.append((family, n))
    return out


@pytest.mark.parametrize("family,n", _all_dims(["SL", "Sp", "SOodd"]))
def test_B_equals_one_plus_dim_plus_half_rank(family, n):
    assert sieve_exponent_B(family, n) == sieve_exponent_from_dim(family, n)


@pytest.mark.xfail(strict=True, reason="even orthogonal closed form shares the Sp expression, "
                   "which differs from 1 + dim + rank/2 = (2n^2 - n + 4)/4")
@pytest.mark.parametrize("family,n", _all_dims(["SOplus", "SOminus"]))
def test_B_even_orthogonal_against_dimension(family, n):
    assert sieve_exponent_B(family, n) == sieve_exponent_from_dim(family, n)


def test_dim_rank():
    assert dim_rank("SL", 3) == (8, 2)
    assert dim_rank("Sp", 4) == (10, 2)
    assert dim_rank("SOodd", 5) == (10, 2)
    assert dim_rank("SOplus", 4) == (6, 2)


# ---------------------------------------------------------------------------
# trace probabilities


def test_prob_trace_examples():
    spec = GroupSpec("SL", 2, 5)
    assert prob_trace_in(spec, LocalSet(5, np.ones(5, dtype=bool))) == 1
    assert prob_trace_in(spec, LocalSet(5, np.zeros(5, dtype=bool))) == 0
    A = LocalSet.from_elements(5, squares_with_zero(5))
    assert A.elements().tolist() == [0, 1, 4]
    brute = sum(1 for a in range(5) for b in range(5) for c in range(5) for d in range(5)
                if (a * d - b * c) % 5 == 1 and (a + d) % 5 in (0, 1, 4))
    assert prob_trace_in(spec, A) == Fraction(brute, 120)
    with pytest.raises(MismatchedField):
        prob_trace_in(spec, LocalSet.from_elements(7, [0]))


@pytest.mark.parametrize("family", ["SL", "Sp"])
@pytest.mark.parametrize("ell", SMALL_PRIMES)
def test_prob_trace_error_term(family, ell):
    # |P(tr g in A) - |A|/l| <= kappa l^{1 - alpha(G) - 1/2} for the squares, kappa <= 5
    A = mth_power_set(ell, 2)
    spec = GroupSpec(family, 2, ell)
    err = abs(prob_trace_in(spec, A) - A.density)
    bound = ell ** (1 - float(alpha_exponent(family, 2)) - 0.5)
    assert float(err) <= 5 * bound


# ---------------------------------------------------------------------------
# exports


def test_histogram_csv():
    _, hist = enumerate_group(GroupSpec("SL", 2, 3))
    rows = list(csv.reader(io.StringIO(hist.to_csv())))
    assert rows[0] == ["t", "count"]
    assert [int(r[1]) for r in rows[1:]] == hist.counts.tolist()
    assert sum(hist.as_dict().values()) == 24
    assert hist.probabilities().sum() == pytest.approx(1)


def test_metadata_json():
    meta = group_metadata(GroupSpec("Sp", 4, 3))
    assert json.loads(json.dumps(meta)) == {
        "family": "Sp", "n": 4, "ell": 3, "order": 51840,
        "alpha_num": 3, "alpha_den": 1, "B_num": 12, "B_den": 1,
    }
    gl = group_metadata(GroupSpec("GL", 2, 3))
    assert "B_num" not in gl and gl["order"] == 48
