"""Spectra of the classical map M on regular graphs.

For a v-regular graph whose vertex scattering matrices have reflection
probability r and equal transmission probabilities, M is determined by the
connectivity eigenvalues mu_j: each mu_j contributes the two roots of

    u^2 - (1-r)/(v-1) mu_j u + (1-rv)/(v-1) = 0,

and the remaining ``(v-2)V`` eigenvalues sit at ``+-|1-rv|/(v-1)``.  This
module evaluates that closed form, compares it with direct diagonalization,
and derives spectral gaps and non-backtracking orbit counts.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .graph import GraphError, GraphTopology, connectivity_spectrum, is_ramanujan
from .numerics import eigenvalues_dense, merge_clusters, sort_spectrum
from .quantize import build_M, build_W, uniform_assignment
from .scatmat import Family, et_matrix


class Source(str, enum.Enum):
    DIRECT = "direct"
    THEOREM = "theorem"


def spectral_gap(values, tol: float = 1e-9) -> float:
    """``1 - max |lambda|`` after removing the one eigenvalue closest to 1."""
    values = np.asarray(values, dtype=complex)
    if values.size < 2:
        return 1.0
    k = int(np.argmin(np.abs(values - 1.0)))
    if abs(values[k] - 1.0) > tol:
        raise ValueError("spectrum does not contain the eigenvalue 1")
    rest = np.delete(values, k)
    return float(1.0 - np.max(np.abs(rest)))


@dataclass(frozen=True)
class ClassicalSpectrum:
    values: np.ndarray
    gap: float
    source: Source
    r_parameter: float | None = None

    def __len__(self) -> int:
        return len(self.values)


def family_r(family, v: int) -> float:
    """Reflection probability of a scattering family at valency v."""
    family = Family(family)
    if family is Family.NEUMANN:
        return (2.0 / v - 1.0) ** 2
    if family is Family.FOURIER:
        return 1.0 / v
    return 0.0


def _require_regular(g: GraphTopology) -> int:
    v = g.regular_degree()
    if v is None:
        raise GraphError("closed-form spectrum needs a regular graph")
    return v


def theorem_roots(v: int, r: float, mu) -> tuple[np.ndarray, np.ndarray]:
    """The pair (u_j, u~_j) for each connectivity eigenvalue mu_j.

    The principal complex square root of the discriminant is taken once and
    used with both signs, so complex roots come out as exact conjugates.
    """
    mu = np.asarray(mu, dtype=float)
    disc = (1 - r) ** 2 * mu**2 - 4 * (1 - r * v) * (v - 1)
    root = np.sqrt(disc.astype(complex))
    u = ((1 - r) * mu + root) / (2 * (v - 1))
    ut = ((1 - r) * mu - root) / (2 * (v - 1))
    return u, ut


def spectrum_via_theorem(g: GraphTopology, r: float) -> ClassicalSpectrum:
    v = _require_regular(g)
    if not 0.0 <= r <= 1.0:
        raise ValueError("r must lie in [0, 1]")
    if v <= 3:
        warnings.warn("closed-form spectrum is stated for v > 3", stacklevel=2)
    mu = connectivity_spectrum(g)
    u, ut = theorem_roots(v, r, mu)
    k = (v - 2) * g.V // 2
    fixed = abs(1 - r * v) / (v - 1)
    values = np.concatenate([u, ut, np.full(k, fixed), np.full(k, -fixed)]).astype(complex)
    values = sort_spectrum(values)
    return ClassicalSpectrum(values, spectral_gap(values), Source.THEOREM, r)


CLUSTER_RADIUS = 1e-7


def spectrum_direct(M, r: float | None = None) -> ClassicalSpectrum:
    """Spectrum of M by dense diagonalization.

    Eigenvalue clusters narrower than ``CLUSTER_RADIUS`` are replaced by
    their mean (see :func:`etgraph.numerics.merge_clusters`).
    """
    spec = eigenvalues_dense(M)
    values = sort_spectrum(merge_clusters(spec.values, CLUSTER_RADIUS))
    return ClassicalSpectrum(values, spectral_gap(values), Source.DIRECT, r)


def family_M(g: GraphTopology, family) -> np.ndarray:
    """M for the family at every vertex; ET uses a constructible ET matrix."""
    family = Family(family)
    if family.is_et:
        return build_M(g, [et_matrix(v) for v in g.valencies.tolist()])
    return build_M(g, uniform_assignment(g, family))


@dataclass(frozen=True)
class RealityClass:
    kind: str  # "two_real" or "conjugate_pair_on_circle"
    modulus: float | None
    all_real: bool


def reality_classification(v: int, r: float, mu: float) -> RealityClass:
    """Whether mu yields two real eigenvalues of M or a conjugate pair.

    In the complex case both roots have modulus ``sqrt((1-rv)/(v-1))``.
    For ``r >= 1/v`` every eigenvalue is real; this is flagged via
    ``all_real``.
    """
    if abs(mu) > v + 1e-12:
        raise ValueError("|mu| must not exceed v")
    if r * v >= 1:
        return RealityClass("two_real", None, True)
    disc = (1 - r) ** 2 * mu**2 - 4 * (1 - r * v) * (v - 1)
    if disc >= 0:
        return RealityClass("two_real", None, False)
    return RealityClass("conjugate_pair_on_circle", math.sqrt((1 - r * v) / (v - 1)), False)


def gap_threshold(v: int, r: float) -> float:
    """|mu| above which the gap-comparison argument applies for reflection r.

    ``(2 - rv)/(1 - r) sqrt(v-1)`` for ``0 < r < 1/v``; ``v / sqrt(v-1)`` for
    ``r >= 1/v``.  Exceeding ``2 sqrt(v-1)`` always suffices.
    """
    if r * v < 1:
        return (2 - r * v) / (1 - r) * math.sqrt(v - 1)
    return v / math.sqrt(v - 1)


@dataclass(frozen=True)
class GapRow:
    family: str
    r: float
    gap: float
    epsilon: float
    condition: bool


def gap_comparison(g: GraphTopology) -> list[GapRow]:
    """Spectral gaps for ET, Fourier and Neumann scattering on a regular graph.

    ``condition`` reports whether C has a nontrivial eigenvalue in
    ``(2 sqrt(v-1) - eps, v)`` or ``[-v, -2 sqrt(v-1) + eps)``, with eps
    chosen from the thresholds of :func:`gap_threshold` (for the ET row
    itself eps = 0, i.e. the graph is non-Ramanujan).
    """
    v = _require_regular(g)
    if v <= 3:
        raise GraphError("gap comparison assumes v > 3")
    mu = connectivity_spectrum(g)
    top = float(np.max(np.abs(mu[1:])))
    bound = 2 * math.sqrt(v - 1)
    rows = []
    for fam in (Family.ET_HADAMARD, Family.FOURIER, Family.NEUMANN):
        r = family_r(fam, v)
        eps = 0.0 if r == 0 else bound - min(gap_threshold(v, r), bound)
        gap = spectrum_via_theorem(g, r).gap
        name = "et" if fam.is_et else fam.value
        rows.append(GapRow(name, r, gap, eps, top > bound - eps))
    return rows


def ramanujan_disc_excess(g: GraphTopology, values) -> float:
    """Largest non-dominant |lambda| minus ``(v-1)^(-1/2)``."""
    v = _require_regular(g)
    values = np.asarray(values, dtype=complex)
    k = int(np.argmin(np.abs(values - 1.0)))
    rest = np.delete(values, k)
    return float(np.max(np.abs(rest)) - 1 / math.sqrt(v - 1))


def f_mu(v: int, mu: float, r):
    """Largest root ``[(1-r) mu + sqrt((1-r)^2 mu^2 + 4(vr-1)(v-1))] / (2(v-1))``."""
    r = np.asarray(r, dtype=float)
    disc = (1 - r) ** 2 * mu**2 + 4 * (v * r - 1) * (v - 1)
    return ((1 - r) * mu + np.sqrt(disc.astype(complex))) / (2 * (v - 1))


def monotonicity_domain(v: int, mu: float) -> tuple[float, float]:
    if mu == 0:
        return 1.0 / v, 1.0
    return 1 - 2 * (v - 1) * (v - math.sqrt(v * v - mu * mu)) / mu**2, 1.0


def lemma_monotonicity_check(v: int, mu: float, r_grid) -> bool:
    """True iff f_mu is real and strictly increasing along ``r_grid``."""
    if not 0 <= mu < v:
        raise ValueError("need 0 <= mu < v")
    r_grid = np.asarray(r_grid, dtype=float)
    lo, hi = monotonicity_domain(v, mu)
    if np.any(r_grid < lo - 1e-12) or np.any(r_grid > hi + 1e-12):
        raise ValueError(f"grid leaves the domain [{lo}, {hi}]")
    # the discriminant vanishes at the lower endpoint; clip round-off there
    disc = (1 - r_grid) ** 2 * mu**2 + 4 * (v * r_grid - 1) * (v - 1)
    tiny = 1e-12 * (mu**2 + 4 * v * (v - 1))
    if np.any(disc < -tiny):
        return False
    vals = ((1 - r_grid) * mu + np.sqrt(np.clip(disc, 0.0, None))) / (2 * (v - 1))
    return bool(np.all(np.diff(vals) > 0))


INT64_SAFE = 2**62


def count_nb_closed_walks(g: GraphTopology, n: int) -> int:
    """``trace(W^n)``: closed non-backtracking walks of length n with a marked start bond.

    Exact integer arithmetic.  Uses int64 while the entry bound
    ``max_row_sum^n`` fits, Python integers beyond that.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    W = build_W(g)
    rowmax = int(W.sum(axis=1).max()) if W.size else 0
    if rowmax**n < INT64_SAFE:
        return int(np.trace(np.linalg.matrix_power(W, n)))
    Wo = W.astype(object)
    P = Wo.copy()
    for _ in range(n - 1):
        P = P.dot(Wo)
    return int(np.trace(P))


def alon_boppana_report(g: GraphTopology) -> dict:
    v = _require_regular(g)
    mu = connectivity_spectrum(g)
    return {"V": g.V, "v": v, "mu1": float(mu[1]), "bound": 2 * math.sqrt(v - 1),
            "ramanujan": is_ramanujan(g, mu).is_ramanujan}
