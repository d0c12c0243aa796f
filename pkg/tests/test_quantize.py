import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etgraph.graph import complete_graph, random_regular
from etgraph.numerics import eigenvalues_dense, match_spectra, unitarity_residual
from etgraph.quantize import (
    AssignmentError,
    bartholdi_residual,
    bass_identity_residual,
    build_M,
    build_U,
    build_W,
    random_phases,
    secular_value,
    uniform_assignment,
)
from etgraph.scatmat import build_fourier, build_neumann, et_five, et_from_hadamard, skew_hadamard
from etgraph.spectral import family_M, family_r


def _k4_neumann():
    g = complete_graph(4)
    return g, uniform_assignment(g, "neumann")


def test_U_k4_neumann_zero_phase():
    g, assign = _k4_neumann()
    U = build_U(g, assign, np.zeros(g.B))
    assert np.all(U.imag == 0)
    rev = g.bond_index.reversal
    for b in range(2 * g.B):
        row = U[b]
        nz = np.sort(row[row != 0].real)
        np.testing.assert_allclose(nz, [-1 / 3, 2 / 3, 2 / 3], atol=1e-15)
        assert U[b, rev[b]] == pytest.approx(-1 / 3)


def test_U_time_reversal_structure_zero_phase():
    g, assign = _k4_neumann()
    U = build_U(g, assign, np.zeros(g.B))
    P = g.bond_index.reversal_matrix()
    np.testing.assert_array_equal(U, P @ U.T @ P)


def test_U_time_reversal_with_phases():
    # U = D S with symmetric S; P U^T P = S D = D^-1 U D
    g = random_regular(5, 20, seed=2)
    x = random_phases(g, np.random.default_rng(0))
    U = build_U(g, [et_five()] * g.V, x)
    P = g.bond_index.reversal_matrix()
    D = np.exp(1j * np.repeat(x, 2))
    np.testing.assert_allclose(P @ U.T @ P, (U * D[None, :]) / D[:, None], atol=1e-15)
    ok, worst = match_spectra(eigenvalues_dense(U).values, eigenvalues_dense(P @ U.T @ P).values, 1e-9)
    assert ok, worst


def test_assignment_errors():
    g = complete_graph(5)
    with pytest.raises(AssignmentError):
        build_U(g, [build_neumann(3)] * 5, np.zeros(g.B))
    with pytest.raises(AssignmentError):
        build_U(g, [build_neumann(4)] * 4, np.zeros(g.B))
    with pytest.raises(AssignmentError):
        build_U(g, [build_neumann(4)] * 5, np.zeros(g.B - 1))
    with pytest.raises(AssignmentError):
        build_M(g, [np.ones((4, 4))] * 5)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["neumann", "fourier", "et"]), st.integers(0, 2**32 - 1))
def test_U_unitary_and_M_doubly_stochastic(family, seed):
    g = random_regular(4, 12, seed=seed % 50)
    assign = [et_from_hadamard(skew_hadamard(4))] * g.V if family == "et" else uniform_assignment(g, family)
    U = build_U(g, assign, random_phases(g, np.random.default_rng(seed)))
    assert unitarity_residual(U) <= 1e-12
    M = build_M(g, assign)
    np.testing.assert_allclose(M.sum(axis=0), 1, atol=1e-12)
    np.testing.assert_allclose(M.sum(axis=1), 1, atol=1e-12)
    np.testing.assert_allclose(M, np.abs(U) ** 2, atol=1e-15)
    vals = eigenvalues_dense(M).values
    assert np.abs(vals).max() <= 1 + 1e-9
    assert np.abs(vals - 1).min() <= 1e-9


def test_M_et_democratic():
    g = complete_graph(13)
    M = build_M(g, [et_from_hadamard(skew_hadamard(12))] * g.V)
    W = build_W(g)
    assert np.linalg.norm(M - W / 11) <= 1e-15


def test_M_fourier():
    g = complete_graph(5)
    M = build_M(g, [build_fourier(4)] * g.V)
    bonds = g.bond_index.bonds
    expected = np.array([[0.25 if b1[1] == b2[0] else 0 for b2 in bonds] for b1 in bonds])
    np.testing.assert_allclose(M, expected, atol=1e-15)


def test_M_neumann_k4():
    g, assign = _k4_neumann()
    M = build_M(g, assign)
    rev = g.bond_index.reversal
    for b in range(2 * g.B):
        assert M[b, rev[b]] == pytest.approx(1 / 9)
        assert np.sort(M[b][M[b] > 0])[1:] == pytest.approx([4 / 9, 4 / 9])


def test_W_structure(k5):
    W = build_W(k5)
    P = k5.bond_index.reversal_matrix()
    assert set(np.unique(W)) == {0, 1}
    assert np.all(np.diag(W @ P) == 0)
    assert np.all(W.sum(axis=1) == 3)


def test_M_equals_W_over_v_minus_1_exactly():
    g = random_regular(5, 20, seed=9)
    M = build_M(g, [et_five()] * g.V)
    assert np.linalg.norm(M - build_W(g) / 4) <= 1e-15


def test_secular_value(k5):
    M = family_M(k5, "neumann")
    assert secular_value(M, 0) == 1
    assert abs(secular_value(M, 1)) <= 1e-9
    z = 0.37 + 0.2j
    vals = eigenvalues_dense(M).values
    prod = np.prod(1 - z * vals)
    assert abs(secular_value(M, z) - prod) <= 1e-7 * abs(prod)


def test_bass_identity(k5, reg5_20):
    assert bass_identity_residual(k5, 0.1) <= 1e-8
    assert bass_identity_residual(k5, 0) == 0
    assert bass_identity_residual(reg5_20, 0.3 + 0.2j) <= 1e-8


def test_bass_requires_regular():
    from etgraph.graph import GraphError, GraphTopology
    with pytest.raises(GraphError):
        bass_identity_residual(GraphTopology(3, ((0, 1), (1, 2))), 0.1)


@pytest.mark.parametrize("family", ["et", "fourier", "neumann"])
def test_bartholdi_general_r(reg5_20, family):
    fam = "et-five" if family == "et" else family
    M = family_M(reg5_20, fam)
    r = family_r(fam, 5)
    pts = 1.2 * np.exp(2j * np.pi * (np.arange(20) + 0.25) / 20)
    assert max(bartholdi_residual(reg5_20, M, r, u) for u in pts) <= 1e-7
