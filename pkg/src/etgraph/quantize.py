"""Quantum evolution operator U, classical map M and Hashimoto operator W.

Row/column indices are directed bonds numbered by
:class:`etgraph.graph.DirectedBondIndex`.  With bond ``b = (p -> j)`` and
``b' = (j -> q)``::

    U[b, b'] = sigma^(j)[slot_j(p), slot_j(q)] * exp(i x_{p,j})

where ``x`` is the phase of the undirected bond {p, j}; both directions of a
bond carry the same phase.  All other entries vanish.
"""
from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from .graph import GraphError, GraphTopology
from .numerics import as_matrix, log_determinant
from .scatmat import CONSTRUCT_TOL, ScatteringMatrix, build_family


class AssignmentError(ValueError):
    """Scattering matrices or phases do not fit the graph."""


def _sigmas(assign) -> list[np.ndarray]:
    return [s.sigma if isinstance(s, ScatteringMatrix) else np.asarray(s) for s in assign]


def check_assignment(g: GraphTopology, assign: Sequence) -> list[np.ndarray]:
    """Validate a per-vertex list of scattering matrices against ``g``."""
    sigmas = _sigmas(assign)
    if len(sigmas) != g.V:
        raise AssignmentError(f"need {g.V} scattering matrices, got {len(sigmas)}")
    for j, (s, v) in enumerate(zip(sigmas, g.valencies)):
        if s.shape != (v, v):
            raise AssignmentError(f"vertex {j} has valency {v} but sigma has shape {s.shape}")
        if np.linalg.norm(s @ s.conj().T - np.eye(v)) > CONSTRUCT_TOL:
            raise AssignmentError(f"sigma at vertex {j} is not unitary")
    return sigmas


def uniform_assignment(g: GraphTopology, family, **kwargs) -> list[ScatteringMatrix]:
    """Same scattering family at every vertex, one matrix per distinct valency."""
    cache = {}
    out = []
    for v in g.valencies.tolist():
        if v not in cache:
            cache[v] = build_family(family, v, **kwargs)
        out.append(cache[v])
    return out


def _scatter_entries(g: GraphTopology, sigmas):
    # (row bonds, column bonds, sigma values) of the nonzero pattern
    idx = g.bond_index
    bonds = idx.bonds
    out_of = [[] for _ in range(g.V)]
    for b, (p, q) in enumerate(bonds):
        out_of[p].append(b)
    rows, cols, vals = [], [], []
    for b, (p, j) in enumerate(bonds):
        s = sigmas[j]
        sp = idx.slot[j][p]
        for b2 in out_of[j]:
            q = bonds[b2][1]
            rows.append(b)
            cols.append(b2)
            vals.append(s[sp, idx.slot[j][q]])
    return np.array(rows), np.array(cols), np.array(vals, dtype=complex)


def scattering_matrix_S(g: GraphTopology, assign) -> np.ndarray:
    """The phase-free part S of U (U = diag(exp(i x_b)) S)."""
    sigmas = check_assignment(g, assign)
    n = 2 * g.B
    S = np.zeros((n, n), dtype=complex)
    r, c, v = _scatter_entries(g, sigmas)
    S[r, c] = v
    return S


def bond_phases(g: GraphTopology, phases) -> np.ndarray:
    """Expand per-edge phases (length B) to per-directed-bond phases (length 2B)."""
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (g.B,):
        raise AssignmentError(f"need {g.B} bond phases, got shape {phases.shape}")
    if not np.all(np.isfinite(phases)):
        raise AssignmentError("phases must be finite")
    return np.repeat(phases, 2)


def random_phases(g: GraphTopology, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, 2 * np.pi, size=g.B)


def build_U(g: GraphTopology, assign, phases) -> np.ndarray:
    x = bond_phases(g, phases)
    S = scattering_matrix_S(g, assign)
    return np.exp(1j * x)[:, None] * S


def build_M(g: GraphTopology, assign) -> np.ndarray:
    """Transition probabilities ``|U|^2`` (real 2B x 2B, doubly stochastic)."""
    return np.abs(scattering_matrix_S(g, assign)) ** 2


def build_W(g: GraphTopology) -> np.ndarray:
    """Hashimoto non-backtracking bond adjacency, exact 0/1 integers."""
    bonds = g.bond_index.bonds
    n = len(bonds)
    W = np.zeros((n, n), dtype=np.int64)
    out_of = [[] for _ in range(g.V)]
    for b, (p, q) in enumerate(bonds):
        out_of[p].append(b)
    for b, (p, j) in enumerate(bonds):
        for b2 in out_of[j]:
            if bonds[b2][1] != p:
                W[b, b2] = 1
    return W


def secular_value(a, z: complex) -> complex:
    """``det(I - z A)``."""
    a = as_matrix(a, square=True)
    return complex(np.linalg.det(np.eye(a.shape[0]) - z * a))


def _regular_degree(g: GraphTopology) -> int:
    v = g.regular_degree()
    if v is None:
        raise GraphError("graph must be regular")
    if ((v - 2) * g.V) % 2:
        raise GraphError("(v-2)V must be even")
    return v


def _rel_diff_logs(log_a: complex, log_b: complex) -> float:
    """|a - b| / max(|a|, |b|) from the complex logarithms of a and b."""
    if math.isinf(log_a.real) and math.isinf(log_b.real):
        return 0.0
    if log_a.real < log_b.real:
        log_a, log_b = log_b, log_a
    return abs(1.0 - np.exp(log_b - log_a))


def bass_identity_residual(g: GraphTopology, u: complex) -> float:
    """Relative mismatch of Bass' identity for a v-regular graph.

    Compares ``det(I - u W)`` with
    ``(1 - u^2)^(B - V) det((1 + (v-1) u^2) I - u C)``, both evaluated
    independently via log-determinants.
    """
    v = _regular_degree(g)
    u = complex(u)
    W = build_W(g).astype(float)
    lhs = log_determinant(np.eye(W.shape[0]) - u * W)
    C = g.C.astype(float)
    inner = log_determinant((1 + (v - 1) * u * u) * np.eye(g.V) - u * C)
    rhs = (g.B - g.V) * np.log(complex(1 - u * u)) + inner
    return _rel_diff_logs(lhs, rhs)


def bartholdi_residual(g: GraphTopology, M, r: float, u: complex) -> float:
    """Relative mismatch between ``det(u I - M)`` and its factorization through C.

    ``(u^2 - (1-rv)^2/(v-1)^2)^((v-2)V/2) det((u^2 + (1-rv)/(v-1)) I - (1-r)/(v-1) C u)``
    """
    v = _regular_degree(g)
    u = complex(u)
    M = as_matrix(M, square=True)
    lhs = log_determinant(u * np.eye(M.shape[0]) - M)
    a = (1 - r * v) / (v - 1)
    k = (v - 2) * g.V // 2
    inner = log_determinant((u * u + a) * np.eye(g.V) - (1 - r) / (v - 1) * u * g.C.astype(float))
    rhs = k * np.log(complex(u * u - a * a)) + inner
    return _rel_diff_logs(lhs, rhs)
