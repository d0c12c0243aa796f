"""Vertex scattering matrices.

Neumann and Fourier matrices, and equi-transmitting (ET) matrices: unitary,
zero diagonal, every off-diagonal entry of modulus ``(v-1)**-0.5``.  ET
matrices come from skew-Hadamard matrices (Paley construction plus
doubling), from Dirichlet characters modulo an odd prime, from the explicit
5x5 example, or from a numerical alternating-projection search.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import as_matrix, unitarity_residual, unitary_polar_factor

CONSTRUCT_TOL = 1e-12


class Family(str, enum.Enum):
    NEUMANN = "neumann"
    FOURIER = "fourier"
    ET_HADAMARD = "et-hadamard"
    ET_CHARACTER = "et-character"
    ET_FIVE = "et-five"
    ET_SEARCHED = "et-search"

    @property
    def is_et(self) -> bool:
        return self.value.startswith("et-")


class Symmetry(str, enum.Enum):
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"
    NONE = "none"


class ConstructionError(ValueError):
    """Raised when a matrix cannot be built for the requested parameters."""


def classify_symmetry(sigma: np.ndarray, tol: float = CONSTRUCT_TOL) -> Symmetry:
    if np.linalg.norm(sigma - sigma.T) <= tol:
        return Symmetry.SYMMETRIC
    if np.linalg.norm(sigma + sigma.T) <= tol:
        return Symmetry.ANTISYMMETRIC
    return Symmetry.NONE


@dataclass(frozen=True)
class ScatteringReport:
    """Diagnostics of a candidate scattering matrix against the r-pattern."""

    dim: int
    expected_r: float
    unitarity_residual: float
    diagonal_deviation: float
    offdiagonal_deviation: float
    symmetry: Symmetry
    tol: float

    @property
    def unitary(self) -> bool:
        return self.unitarity_residual <= self.tol

    @property
    def diagonal_ok(self) -> bool:
        return self.diagonal_deviation <= self.tol

    @property
    def offdiagonal_ok(self) -> bool:
        return self.offdiagonal_deviation <= self.tol

    @property
    def passed(self) -> bool:
        return self.unitary and self.diagonal_ok and self.offdiagonal_ok


def verify_scattering(sigma, expected_r: float, tol: float = CONSTRUCT_TOL) -> ScatteringReport:
    """Check unitarity and the moduli pattern ``|s_ii|^2 = r``, ``|s_ij|^2 = (1-r)/(v-1)``.

    Deviations are measured on moduli (not squared moduli), as the maximum
    absolute deviation over the diagonal resp. off-diagonal entries.
    """
    sigma = as_matrix(sigma, square=True)
    v = sigma.shape[0]
    mod = np.abs(sigma)
    diag_dev = float(np.max(np.abs(np.diag(mod) - math.sqrt(expected_r))))
    if v > 1:
        off = mod[~np.eye(v, dtype=bool)]
        off_target = math.sqrt((1.0 - expected_r) / (v - 1))
        off_dev = float(np.max(np.abs(off - off_target)))
    else:
        off_dev = 0.0
    return ScatteringReport(
        dim=v,
        expected_r=expected_r,
        unitarity_residual=unitarity_residual(sigma),
        diagonal_deviation=diag_dev,
        offdiagonal_deviation=off_dev,
        symmetry=classify_symmetry(sigma, tol),
        tol=tol,
    )


@dataclass(frozen=True)
class ScatteringMatrix:
    """A validated v x v vertex scattering matrix.

    Construction verifies unitarity, the r-pattern and the declared symmetry;
    ``validate=False`` skips this for callers that already did so.
    """

    sigma: np.ndarray
    family: Family
    r_parameter: float
    symmetry: Symmetry = field(default=Symmetry.NONE)
    tol: float = CONSTRUCT_TOL
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        self.sigma.setflags(write=False)
        if not self.validate:
            return
        if self.family.is_et and self.r_parameter != 0:
            raise ConstructionError("ET families must have r_parameter = 0")
        if self.family.is_et and np.any(np.diag(self.sigma) != 0):
            raise ConstructionError("ET matrix must have an exactly zero diagonal")
        report = verify_scattering(self.sigma, self.r_parameter, self.tol)
        if not report.passed:
            raise ConstructionError(f"{self.family.value} matrix failed verification: {report}")
        if report.symmetry is not self.symmetry:
            raise ConstructionError(
                f"declared symmetry {self.symmetry.value}, found {report.symmetry.value}"
            )

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]


def _root_of_unity(t: int, n: int) -> complex:
    """exp(2 pi i t / n), exact at multiples of a quarter turn."""
    t %= n
    if (4 * t) % n == 0:
        return (1, 1j, -1, -1j)[(4 * t) // n]
    return complex(np.exp(2j * np.pi * t / n))


def build_neumann(v: int) -> ScatteringMatrix:
    if v < 2:
        raise ConstructionError("Neumann matrix needs v >= 2")
    sigma = np.full((v, v), 2.0 / v, dtype=complex) - np.eye(v)
    return ScatteringMatrix(sigma, Family.NEUMANN, (2.0 / v - 1.0) ** 2, Symmetry.SYMMETRIC)


def build_fourier(v: int) -> ScatteringMatrix:
    """Discrete Fourier matrix ``exp(2 pi i p q / v) / sqrt(v)``, p, q = 1..v."""
    if v < 2:
        raise ConstructionError("Fourier matrix needs v >= 2")
    idx = np.arange(1, v + 1)
    table = np.array([_root_of_unity(t, v) for t in range(v)])
    sigma = table[np.outer(idx, idx) % v] / math.sqrt(v)
    return ScatteringMatrix(sigma, Family.FOURIER, 1.0 / v, Symmetry.SYMMETRIC)


# -- skew-Hadamard matrices -------------------------------------------------


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


def legendre_symbol(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


@dataclass(frozen=True)
class SkewHadamard:
    """Integer +-1 matrix with ``H H^T = n I`` and ``H + H^T = 2 I``."""

    H: np.ndarray

    def __post_init__(self):
        H = np.asarray(self.H)
        if H.dtype.kind not in "iu":
            raise ConstructionError("skew-Hadamard matrix must be held as integers")
        n = H.shape[0]
        if H.shape != (n, n) or not np.all(np.abs(H) == 1):
            raise ConstructionError("skew-Hadamard matrix must be square with +-1 entries")
        eye = np.eye(n, dtype=np.int64)
        if not np.array_equal(H @ H.T, n * eye):
            raise ConstructionError("H H^T != n I")
        if not np.array_equal(H + H.T, 2 * eye):
            raise ConstructionError("H + H^T != 2 I")
        H.setflags(write=False)
        object.__setattr__(self, "H", H)

    @property
    def order(self) -> int:
        return self.H.shape[0]


def build_paley_skew_hadamard(order: int) -> SkewHadamard:
    """Paley skew-Hadamard matrix of order ``q + 1``, q a prime = 3 mod 4.

    ``H = I + S`` with ``S = [[0, 1^T], [-1, Q]]`` and Q the Jacobsthal matrix
    ``Q_ij = (j - i | q)``.  Order 2 gives ``[[1, 1], [-1, 1]]``.
    """
    if order == 2:
        return SkewHadamard(np.array([[1, 1], [-1, 1]], dtype=np.int64))
    q = order - 1
    if not (is_prime(q) and q % 4 == 3):
        raise ConstructionError(
            f"order {order} is not q+1 with q prime and q = 3 mod 4; "
            "try doubling a smaller skew-Hadamard matrix"
        )
    chi = np.array([legendre_symbol(a, q) for a in range(q)], dtype=np.int64)
    idx = np.arange(q)
    jacobsthal = chi[(idx[None, :] - idx[:, None]) % q]
    S = np.zeros((order, order), dtype=np.int64)
    S[0, 1:] = 1
    S[1:, 0] = -1
    S[1:, 1:] = jacobsthal
    return SkewHadamard(np.eye(order, dtype=np.int64) + S)


def double_skew_hadamard(h: SkewHadamard) -> SkewHadamard:
    """``[[H, H], [-H^T, H^T]]``, a skew-Hadamard matrix of twice the order."""
    H = h.H
    return SkewHadamard(np.block([[H, H], [-H.T, H.T]]))


def skew_hadamard(order: int) -> SkewHadamard:
    """A skew-Hadamard matrix of the given order from Paley's construction,
    doubling a smaller one if needed."""
    try:
        return build_paley_skew_hadamard(order)
    except ConstructionError:
        if order % 2 == 0 and order > 2:
            try:
                return double_skew_hadamard(skew_hadamard(order // 2))
            except ConstructionError:
                pass
        raise ConstructionError(
            f"no Paley/doubling skew-Hadamard construction for order {order}"
        ) from None


def et_from_hadamard(h: SkewHadamard) -> ScatteringMatrix:
    """Antisymmetric ET matrix ``(H - I) / sqrt(v - 1)``."""
    v = h.order
    S = (h.H - np.eye(v, dtype=np.int64)).astype(float)
    sigma = (S / math.sqrt(v - 1)).astype(complex)
    return ScatteringMatrix(sigma, Family.ET_HADAMARD, 0.0, Symmetry.ANTISYMMETRIC)


# -- Dirichlet characters -----------------------------------------------------


def smallest_primitive_root(p: int) -> int:
    if not is_prime(p):
        raise ConstructionError(f"{p} is not prime")
    if p == 2:
        return 1
    n = p - 1
    factors = {d for d in range(2, n + 1) if n % d == 0 and is_prime(d)}
    for g in range(2, p):
        if all(pow(g, n // f, p) != 1 for f in factors):
            return g
    raise AssertionError("unreachable: every prime has a primitive root")


def dirichlet_character(P: int, m: int) -> np.ndarray:
    """Values ``chi(0..P-1)`` of the character ``chi(g^k) = exp(2 pi i m k / (P-1))``.

    ``g`` is the smallest primitive root mod P and ``chi(0) = 0``.  Values
    are looked up by the reduced exponent ``m k mod (P-1)``, so equal
    character values are bitwise equal floats.
    """
    if not (is_prime(P) and P > 2):
        raise ConstructionError(f"P = {P} must be an odd prime")
    if not 1 <= m <= P - 2:
        raise ConstructionError(f"character index m = {m} outside [1, {P - 2}]")
    g = smallest_primitive_root(P)
    chi = np.zeros(P, dtype=complex)
    x = 1
    for k in range(P - 1):
        chi[x] = _root_of_unity(m * k, P - 1)
        x = x * g % P
    return chi


def et_from_character(P: int, m: int | None = None) -> ScatteringMatrix:
    """ET matrix of dimension P+1 built from a Dirichlet character mod P.

    Zero corner, first row and column ``1/sqrt(P)``, inner circulant block
    ``chi(l - j) / sqrt(P)``.  ``m = None`` selects the Legendre symbol
    ``m = (P-1)/2``, which gives a symmetric matrix when ``P = 1 mod 4``.
    """
    if m is None:
        m = (P - 1) // 2
    chi = dirichlet_character(P, m)
    idx = np.arange(P)
    block = chi[(idx[None, :] - idx[:, None]) % P]
    sigma = np.zeros((P + 1, P + 1), dtype=complex)
    sigma[0, 1:] = 1.0
    sigma[1:, 0] = 1.0
    sigma[1:, 1:] = block
    sigma /= math.sqrt(P)
    return ScatteringMatrix(sigma, Family.ET_CHARACTER, 0.0, classify_symmetry(sigma))


def et_five() -> ScatteringMatrix:
    """The explicit symmetric 5x5 ET matrix with cube roots of unity."""
    w = complex(-0.5, math.sqrt(3) / 2)
    w2 = w.conjugate()
    sigma = 0.5 * np.array(
        [
            [0, 1, 1, 1, 1],
            [1, 0, 1, w, w2],
            [1, 1, 0, w2, w],
            [1, w, w2, 0, 1],
            [1, w2, w, 1, 0],
        ],
        dtype=complex,
    )
    return ScatteringMatrix(sigma, Family.ET_FIVE, 0.0, Symmetry.SYMMETRIC)


# -- numerical search -----------------------------------------------------------


@dataclass(frozen=True)
class SearchFailure:
    """Outcome of an ET search that did not reach the target residual."""

    dim: int
    seed: int
    iterations: int
    restarts: int
    best_residual: float
    final_residual: float


def _project_pattern(a: np.ndarray) -> np.ndarray:
    v = a.shape[0]
    target = 1.0 / math.sqrt(v - 1)
    mod = np.abs(a)
    tiny = mod < 1e-14
    out = target * np.where(tiny, 1.0 + 0j, a / np.where(tiny, 1.0, mod))
    np.fill_diagonal(out, 0)
    return out


def et_residual(sigma: np.ndarray) -> float:
    """Unitarity residual plus distance to the ET moduli pattern (Frobenius)."""
    return unitarity_residual(sigma) + float(np.linalg.norm(sigma - _project_pattern(sigma)))


def et_search(
    v: int,
    seed: int,
    max_iters: int = 5000,
    tol: float = 1e-10,
    window: int = 100,
) -> ScatteringMatrix | SearchFailure:
    """Look for a v x v ET matrix by alternating projections.

    Starts from a zero-diagonal matrix with target moduli and uniform random
    phases, then alternates the unitary polar projection with the projection
    onto the moduli pattern.  The residual is evaluated on the
    pattern-projected iterate, where it reduces to ``||s s^dagger - I||_F``.

    Every ``window`` iterations the progress is checked: an iterate stuck
    above 1e-3 that improved by less than 1% is replaced by a fresh random
    start drawn from the same seeded generator.  All restarts share the
    ``max_iters`` budget.  On success the iterate is polished further (within
    the same budget) towards round-off level unitarity.
    """
    if v < 2:
        raise ConstructionError("ET search needs v >= 2")
    rng = np.random.default_rng(seed)

    def fresh_start():
        return _project_pattern(np.exp(2j * np.pi * rng.random((v, v))))

    sigma = fresh_start()
    best = res = mark = et_residual(sigma)
    it = restarts = 0
    while it < max_iters and res > tol:
        sigma = _project_pattern(unitary_polar_factor(sigma))
        res = et_residual(sigma)
        best = min(best, res)
        it += 1
        if it % window == 0 and it < max_iters:
            if res > 1e-3 and res > 0.99 * mark:
                sigma = fresh_start()
                res = et_residual(sigma)
                restarts += 1
            mark = res
    if res > tol:
        return SearchFailure(v, seed, it, restarts, best, res)
    while it < max_iters and res > CONSTRUCT_TOL / 10:
        nxt = _project_pattern(unitary_polar_factor(sigma))
        nres = et_residual(nxt)
        if nres >= res:
            break
        sigma, res = nxt, nres
        it += 1
    return ScatteringMatrix(
        sigma, Family.ET_SEARCHED, 0.0, classify_symmetry(sigma), tol=max(res, CONSTRUCT_TOL)
    )


def build_family(family: Family | str, v: int, *, prime: int | None = None,
                 char_index: int | None = None, seed: int | None = None,
                 max_iters: int = 5000) -> ScatteringMatrix:
    """Dispatch to the constructor for ``family`` at dimension ``v``."""
    family = Family(family)
    if family is Family.NEUMANN:
        return build_neumann(v)
    if family is Family.FOURIER:
        return build_fourier(v)
    if family is Family.ET_HADAMARD:
        return et_from_hadamard(skew_hadamard(v))
    if family is Family.ET_CHARACTER:
        P = v - 1 if prime is None else prime
        if P + 1 != v:
            raise ConstructionError(f"character construction with P = {P} has dimension {P + 1}, not {v}")
        return et_from_character(P, char_index)
    if family is Family.ET_FIVE:
        if v != 5:
            raise ConstructionError("et-five exists only in dimension 5")
        return et_five()
    if seed is None:
        raise ConstructionError("et-search needs an explicit seed")
    result = et_search(v, seed, max_iters)
    if isinstance(result, SearchFailure):
        raise ConstructionError(
            f"ET search in dimension {v} failed (best residual {result.best_residual:.6g})"
        )
    return result


def et_matrix(v: int) -> ScatteringMatrix:
    """Some constructible ET matrix of dimension v (Hadamard, character or 5x5)."""
    if v == 5:
        return et_five()
    if v == 2:
        return et_from_hadamard(build_paley_skew_hadamard(2))
    try:
        return et_from_hadamard(skew_hadamard(v))
    except ConstructionError:
        pass
    if is_prime(v - 1) and v > 3:
        return et_from_character(v - 1)
    raise ConstructionError(f"no ET construction available in dimension {v}")
