import cmath
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rebel_degroot import errors, spectral
from rebel_degroot.spectral import (
    Basis,
    Verdict,
    contains_eigenvalue,
    eigenvalues,
    has_minus_one_eigenvalue,
    iteration_matrix,
    predict,
    predicted_rate,
    signed_update_matrix,
    spectral_radius,
    spectral_report,
)
from rebel_degroot.topology import AgentTypes, generate_random, period, rebel_bipartite, validate
from test_topology import topologies, typed_sc_topologies

CUBE_ROOTS = [cmath.exp(2j * cmath.pi * k / 3) for k in range(3)]


def assert_same_multiset(got, expected, tol=1e-9):
    remaining = list(expected)
    for z in got:
        i = min(range(len(remaining)), key=lambda i: abs(remaining[i] - z))
        assert abs(remaining[i] - z) < tol, (got, expected)
        remaining.pop(i)
    assert not remaining


# --- eigenvalues ----------------------------------------------------------------

def test_eigenvalues_swap(swap):
    assert_same_multiset(eigenvalues(swap.weights), [1, -1])


def test_eigenvalues_cycle3(cycle3):
    # characteristic polynomial r^3 - 1
    assert_same_multiset(eigenvalues(cycle3.weights), CUBE_ROOTS)


def test_eigenvalues_rotation():
    # r^2 + 1
    assert_same_multiset(eigenvalues([[0, -1], [1, 0]]), [1j, -1j])


def test_eigenvalues_limits():
    with pytest.raises(errors.TooLarge):
        eigenvalues(np.eye(65))
    with pytest.raises(errors.DimensionMismatch):
        eigenvalues(np.ones((2, 3)))


@given(topologies(n_max=12))
@settings(max_examples=100, deadline=None)
def test_eigenvalues_are_roots_of_characteristic_polynomial(t):
    eigs = eigenvalues(t.weights)
    assert len(eigs) == t.n
    for z in eigs:
        smallest_sv = np.linalg.svd(t.weights - z * np.eye(t.n), compute_uv=False)[-1]
        assert smallest_sv < 1e-9
    # trace of A is zero
    assert abs(sum(eigs)) < 1e-9


@given(topologies(n_max=12))
@settings(max_examples=150, deadline=None)
def test_stochastic_spectrum(t):
    eigs = eigenvalues(t.weights)
    assert min(abs(z - 1) for z in eigs) < 1e-9
    assert abs(spectral_radius(t.weights) - 1) < 1e-9


# --- -1 membership --------------------------------------------------------------

def test_minus_one_examples(swap, cycle3, chord3):
    assert has_minus_one_eigenvalue(swap)
    assert not has_minus_one_eigenvalue(cycle3)
    assert not has_minus_one_eigenvalue(chord3)


def test_det_i_plus_a_cycle3(cycle3):
    from rebel_degroot.linalg import det

    # det(I + A) = -p(-1) with p(r) = r^3 - 1
    assert det(np.eye(3) + cycle3.weights) == pytest.approx(2.0)


@given(topologies(n_max=12))
@settings(max_examples=200, deadline=None)
def test_minus_one_membership_agrees_with_eigenvalues(t):
    nearest = min(abs(z + 1) for z in eigenvalues(t.weights))
    assert has_minus_one_eigenvalue(t) == (nearest < 1e-6)


@given(topologies(n_max=10, require_sc=True))
@settings(max_examples=200, deadline=None)
def test_aperiodic_has_no_minus_one(t):
    if period(t) == 1:
        assert not has_minus_one_eigenvalue(t)


@given(topologies(n_max=10, require_sc=True))
@settings(max_examples=100, deadline=None)
def test_even_period_has_minus_one(t):
    # the h-th roots of unity are all eigenvalues of an irreducible matrix of period h
    if period(t) % 2 == 0:
        assert has_minus_one_eigenvalue(t)


# --- matrices -----------------------------------------------------------------

def test_signed_update_matrix_examples(swap, cycle3):
    assert np.array_equal(signed_update_matrix(cycle3, AgentTypes.all_conformists(3)), cycle3.weights)
    assert np.array_equal(signed_update_matrix(cycle3, AgentTypes.all_rebels(3)), -cycle3.weights)
    got = signed_update_matrix(swap, AgentTypes.from_rebels(2, [0]))
    assert np.array_equal(got, [[0, -1], [1, 0]])


def test_signed_update_matrix_mismatch(swap):
    with pytest.raises(errors.DimensionMismatch):
        signed_update_matrix(swap, AgentTypes.all_rebels(3))


def test_iteration_matrix_examples(swap, chord3):
    rebels = AgentTypes.all_rebels(3)
    assert np.array_equal(iteration_matrix(chord3, rebels, 0.0), -chord3.weights)
    assert np.array_equal(iteration_matrix(chord3, AgentTypes.from_rebels(3, [2]), 1.0), np.eye(3))
    np.testing.assert_array_equal(
        iteration_matrix(swap, AgentTypes.all_rebels(2), 0.5), [[0.5, -0.5], [-0.5, 0.5]]
    )


@pytest.mark.parametrize("lam", [-0.1, 1.5, float("nan")])
def test_iteration_matrix_lambda_range(swap, lam):
    with pytest.raises(errors.LambdaOutOfRange):
        iteration_matrix(swap, AgentTypes.all_rebels(2), lam)


@given(topologies(n_max=10), st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.7, 0.9, 1.0]))
@settings(max_examples=150, deadline=None)
def test_all_rebel_iteration_matrix_on_ones(t, lam):
    b = iteration_matrix(t, AgentTypes.all_rebels(t.n), lam)
    np.testing.assert_allclose(b @ np.ones(t.n), (2 * lam - 1) * np.ones(t.n), rtol=0, atol=1e-12)


@given(typed_sc_topologies(n_max=10))
@settings(max_examples=200, deadline=None)
def test_signed_radius_at_most_one(case):
    t, types = case
    assert spectral_radius(signed_update_matrix(t, types)) <= 1 + 1e-9


@given(typed_sc_topologies(n_max=8))
@settings(max_examples=300, deadline=None)
def test_one_in_signed_spectrum_iff_rebel_bipartite(case):
    # an even-rebel labeling d gives (2U-I)A = D A D with D = diag(d), so 1 is an eigenvalue;
    # conversely the unimodular-similarity argument forces such a labeling
    t, types = case
    signed = signed_update_matrix(t, types)
    assert contains_eigenvalue(signed, 1.0) == rebel_bipartite(t, types)[0]


# --- predict ---------------------------------------------------------------------

def test_predict_cycle3_all_rebels(cycle3):
    p = predict(cycle3, AgentTypes.all_rebels(3), 0.5)
    assert p.verdict is Verdict.CONVERGES_TO_MEAN
    assert p.basis == (Basis.ALL_REBEL_NO_MINUS_ONE,)


def test_predict_chord_adds_aperiodic(chord3):
    p = predict(chord3, AgentTypes.all_rebels(3), 0.3)
    assert p.verdict is Verdict.CONVERGES_TO_MEAN
    assert p.basis == (Basis.ALL_REBEL_NO_MINUS_ONE, Basis.APERIODIC)


def test_predict_swap_zero_confidence_divergent(swap):
    p = predict(swap, AgentTypes.all_rebels(2), 0.0)
    assert p.verdict is Verdict.DIVERGENT
    assert p.basis == (Basis.ALL_REBEL_ZERO_CONFIDENCE,)


def test_predict_zero_confidence_without_minus_one_unknown(cycle3):
    assert predict(cycle3, AgentTypes.all_rebels(3), 0.0).verdict is Verdict.UNKNOWN


def test_predict_swap_all_rebels_positive_confidence_unknown(swap):
    assert predict(swap, AgentTypes.all_rebels(2), 0.75).verdict is Verdict.UNKNOWN


def test_predict_mixed_swap(swap):
    p = predict(swap, AgentTypes.from_rebels(2, [0]), 0.5)
    assert p.verdict is Verdict.CONVERGES_TO_MEAN
    assert p.basis == (Basis.ONE_NOT_IN_SIGNED_SPECTRUM,)


def test_predict_mixed_zero_confidence(swap, chord3):
    # signed matrix of the mixed swap has spectrum {i, -i}: radius 1, no certificate
    assert predict(swap, AgentTypes.from_rebels(2, [0]), 0.0).verdict is Verdict.UNKNOWN
    t = generate_random(6, 5, 3, True)
    p = predict(t, AgentTypes.from_rebels(6, [0]), 0.0)
    assert spectral_radius(signed_update_matrix(t, AgentTypes.from_rebels(6, [0]))) < 1
    assert p.verdict is Verdict.CONVERGES_TO_MEAN
    assert p.basis == (Basis.SIGNED_RADIUS_BELOW_ONE,)


def test_predict_rebel_bipartite_unknown(cycle4):
    types = AgentTypes.from_rebels(4, [0, 1])
    p = predict(cycle4, types, 0.5)
    assert p.verdict is Verdict.UNKNOWN
    assert p.rebel_bipartite_note


def test_predict_all_conformists_unknown(chord3):
    p = predict(chord3, AgentTypes.all_conformists(3), 0.4)
    assert p.verdict is Verdict.UNKNOWN
    assert p.rebel_bipartite_note


def test_predict_odd_cycle_upgrade(monkeypatch, chord3):
    monkeypatch.setattr(spectral, "contains_eigenvalue", lambda m, r: True)
    p = predict(chord3, AgentTypes.from_rebels(3, [1]), 0.5)
    assert p.verdict is Verdict.CONVERGES_TO_MEAN
    assert p.basis == (Basis.ODD_REBEL_CYCLE,)


@pytest.mark.parametrize("types", [AgentTypes.all_rebels(3), AgentTypes.from_rebels(3, [0])])
def test_predict_frozen(chord3, types):
    p = predict(chord3, types, 1.0)
    assert p.verdict is Verdict.FROZEN and p.basis == (Basis.LAMBDA_ONE,)


def test_predict_errors(swap):
    with pytest.raises(errors.NonUniformLambda):
        predict(swap, AgentTypes.all_rebels(2), [0.2, 0.3])
    with pytest.raises(errors.NotStronglyConnected):
        predict(validate([[0, 1, 0], [1, 0, 0], [1, 0, 0]]), AgentTypes.all_rebels(3), 0.5)


def test_predict_accepts_uniform_vector(cycle3):
    p = predict(cycle3, AgentTypes.all_rebels(3), [0.5, 0.5, 0.5])
    assert p.verdict is Verdict.CONVERGES_TO_MEAN


# --- rate ------------------------------------------------------------------------

def test_rate_cycle3(cycle3):
    expected = max(abs(0.5 - 0.5 * w) for w in CUBE_ROOTS)
    assert expected == pytest.approx(3**0.5 / 2)
    assert predicted_rate(cycle3, AgentTypes.all_rebels(3), 0.5) == pytest.approx(expected, abs=1e-12)


def test_rate_mixed_swap(swap):
    # eigenvalues 0.5 +- 0.5i
    assert predicted_rate(swap, AgentTypes.from_rebels(2, [0]), 0.5) == pytest.approx(abs(0.5 + 0.5j))


def test_rate_not_convergent(swap):
    with pytest.raises(errors.NotConvergent):
        predicted_rate(swap, AgentTypes.all_rebels(2), 0.75)


@given(topologies(n_max=10, require_sc=True), st.sampled_from([0.1, 0.3, 0.5, 0.7, 0.9]))
@settings(max_examples=100, deadline=None)
def test_rate_all_rebel_formula(t, lam):
    # eigenvalues of lam I - (1-lam) A are lam - (1-lam) r for r in spec(A)
    if has_minus_one_eigenvalue(t):
        return
    expected = max(abs(lam - (1 - lam) * r) for r in eigenvalues(t.weights))
    assert predicted_rate(t, AgentTypes.all_rebels(t.n), lam) == pytest.approx(expected, abs=1e-9)
    assert expected < 1


# --- report ----------------------------------------------------------------------

def test_spectral_report_json(swap):
    rep = spectral_report(swap, AgentTypes.from_rebels(2, [0]), 0.5)
    doc = json.loads(json.dumps(rep.to_dict()))
    assert sorted(doc) == sorted(
        ["eigenvalues", "spectral_radius", "has_minus_one", "has_one_in_signed", "signed_radius", "rate"]
    )
    assert sorted(map(tuple, doc["eigenvalues"])) == [(-1.0, 0.0), (1.0, 0.0)]
    assert doc["has_minus_one"] is True
    assert doc["has_one_in_signed"] is False
    assert doc["signed_radius"] == pytest.approx(1.0)
    assert doc["rate"] == pytest.approx(2**-0.5)


def test_spectral_report_no_rate_when_not_convergent(swap):
    assert spectral_report(swap, AgentTypes.all_rebels(2), 0.0).rate is None
