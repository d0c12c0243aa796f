"""Dense linear-algebra kernels shared by the rest of the package.

Matrices are plain ``numpy`` arrays of complex (or real) dtype.  The
functions here add the checks and accuracy bookkeeping the callers rely on:
finite entries, squareness, a certified residual for every eigenvalue, a
deterministic eigenvalue order, and the JSON matrix file format.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

DEFAULT_TOL = 1e-10


class NumericsError(ValueError):
    """Raised for invalid matrix input (shape, non-finite entries, rank)."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative kernel fails to converge."""


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a square matrix with a certified residual bound.

    ``values`` is ordered by descending modulus, then descending real part,
    then descending imaginary part.
    """

    values: np.ndarray
    residual_bound: float

    def __len__(self) -> int:
        return len(self.values)


def as_matrix(a, square: bool = False) -> np.ndarray:
    arr = np.asarray(a)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise NumericsError(f"expected a nonempty 2-d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericsError("matrix has non-finite entries")
    if square and arr.shape[0] != arr.shape[1]:
        raise NumericsError(f"matrix must be square, got shape {arr.shape}")
    return arr


def sort_spectrum(values: np.ndarray, decimals: int = 12) -> np.ndarray:
    """Order eigenvalues by modulus, real part, imaginary part (all descending).

    Keys are rounded to ``decimals`` so that numerically tied values are
    ordered by the next key rather than by rounding noise.
    """
    values = np.asarray(values, dtype=complex)
    mod = np.round(np.abs(values), decimals)
    re = np.round(values.real, decimals)
    im = np.round(values.imag, decimals)
    order = np.lexsort((-im, -re, -mod))
    return values[order]


def eigenvalues_dense(a, tol: float = DEFAULT_TOL) -> Spectrum:
    """All eigenvalues of a dense square matrix, with residual certification.

    LAPACK's Hessenberg/QR driver computes eigenpairs; every pair is then
    checked directly, ``||A x - lam x|| <= tol * ||A||`` for the normalized
    eigenvector ``x``.  A failed check raises :class:`ConvergenceError`
    instead of returning an uncertified spectrum.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    arr = as_matrix(a, square=True).astype(complex)
    try:
        w, vr = scipy.linalg.eig(arr, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    norms = np.linalg.norm(vr, axis=0)
    norms[norms == 0] = 1.0
    vr = vr / norms
    resid = np.linalg.norm(arr @ vr - vr * w, axis=0)
    scale = max(np.linalg.norm(arr, 2), 1e-300)
    worst = float(resid.max()) if len(resid) else 0.0
    if worst > tol * scale:
        raise ConvergenceError(
            f"eigenpair residual {worst:.3e} exceeds tol*||A|| = {tol * scale:.3e}"
        )
    return Spectrum(values=sort_spectrum(w), residual_bound=worst)


def unitary_polar_factor(a, rank_tol: float = 1e-12) -> np.ndarray:
    """Unitary factor Q of the polar decomposition A = Q P.

    Q is the unitary matrix closest to A in Frobenius norm.  Computed from the
    SVD ``A = W S Vh`` as ``Q = W Vh``.
    """
    arr = as_matrix(a, square=True).astype(complex)
    w, s, vh = np.linalg.svd(arr)
    if s[-1] <= rank_tol * max(s[0], 1e-300):
        raise NumericsError(
            f"matrix is rank deficient (smallest singular value {s[-1]:.3e})"
        )
    return w @ vh


def determinant(a) -> complex:
    arr = as_matrix(a, square=True)
    return complex(np.linalg.det(arr))


def log_determinant(a) -> complex:
    """Complex logarithm of det(A), for determinants that over/underflow.

    Returns ``-inf`` for singular input.
    """
    arr = as_matrix(a, square=True).astype(complex)
    sign, logabs = np.linalg.slogdet(arr)
    if sign == 0:
        return complex(-np.inf)
    return complex(logabs, np.angle(sign))


def unitarity_residual(a) -> float:
    """Frobenius norm of ``A A^dagger - I``."""
    arr = as_matrix(a, square=True)
    return float(np.linalg.norm(arr @ arr.conj().T - np.eye(arr.shape[0])))


def merge_clusters(values, radius: float) -> np.ndarray:
    """Replace each tight cluster of eigenvalues by its mean.

    Clusters are single-linkage groups with links shorter than ``radius``.
    A defective eigenvalue with a Jordan block of size k is split by
    roughly ``eps**(1/k)`` in floating point, while the mean of the split
    cluster stays accurate to ``O(eps)``.
    """
    values = np.asarray(values, dtype=complex).copy()
    n = values.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    close = np.argwhere(np.abs(values[:, None] - values[None, :]) < radius)
    for i, j in close:
        if i < j:
            parent[find(i)] = find(j)
    roots = np.array([find(i) for i in range(n)])
    for root in np.unique(roots):
        members = roots == root
        if members.sum() > 1:
            values[members] = values[members].mean()
    return values


def match_spectra(a, b, tol: float) -> tuple[bool, float]:
    """Greedy minimal-distance matching of two eigenvalue multisets.

    Repeatedly pairs the globally closest remaining (a_i, b_j).  Returns
    whether every matched pair lies within ``tol``, and the worst pair
    distance.  Multisets of different size never match.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.shape != b.shape:
        return False, float("inf")
    if a.size == 0:
        return True, 0.0
    dist = np.abs(a[:, None] - b[None, :])
    flat = np.argsort(dist, axis=None, kind="stable")
    used_a = np.zeros(a.size, dtype=bool)
    used_b = np.zeros(b.size, dtype=bool)
    worst = 0.0
    matched = 0
    for k in flat:
        i, j = divmod(int(k), b.size)
        if used_a[i] or used_b[j]:
            continue
        used_a[i] = used_b[j] = True
        worst = max(worst, float(dist[i, j]))
        matched += 1
        if matched == a.size:
            break
    return worst <= tol, worst


# -- matrix file format ----------------------------------------------------


def matrix_to_dict(a) -> dict:
    arr = as_matrix(a).astype(complex)
    rows, cols = arr.shape
    return {
        "rows": int(rows),
        "cols": int(cols),
        "data": [[float(z.real), float(z.imag)] for z in arr.ravel()],
    }


def matrix_from_dict(obj: dict) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise NumericsError(f"malformed matrix object: {exc}") from exc
    if rows < 1 or cols < 1 or len(data) != rows * cols:
        raise NumericsError(
            f"matrix data has {len(data)} entries, expected {rows}x{cols}"
        )
    try:
        pairs = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise NumericsError(f"malformed matrix entries: {exc}") from exc
    if pairs.shape != (rows * cols, 2):
        raise NumericsError("each matrix entry must be a [re, im] pair")
    arr = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(rows, cols)
    return as_matrix(arr)


def dumps_matrix(a) -> str:
    # json uses repr() for floats, which round-trips exactly (17 significant digits)
    return json.dumps(matrix_to_dict(a))


def loads_matrix(text: str) -> np.ndarray:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NumericsError(f"invalid matrix JSON: {exc}") from exc
    return matrix_from_dict(obj)


def read_matrix(path) -> np.ndarray:
    return loads_matrix(Path(path).read_text())
