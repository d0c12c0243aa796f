"""Random-phase eigenphase ensembles and their spectral statistics.

Each realization draws one uniform phase per undirected bond, builds U and
keeps its sorted eigenphases.  Statistics are taken on the unfolded scale
where the mean spacing is 1: the nearest-neighbour spacing density P(s) and
the number variance V(L), compared with the Wigner surmises and the
asymptotic GOE/GUE number variances.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats as sps

from .graph import GraphTopology
from .quantize import build_U, check_assignment

EIG_UNIT_TOL = 1e-9
DEFAULT_WINDOWS = 200


class StatsError(ValueError):
    pass


def realization_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for realization ``index``, hashed from both integers."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(index)]))


def eigenphases(U: np.ndarray) -> np.ndarray:
    """Sorted eigenphases of a unitary matrix, in [0, 2 pi)."""
    lam = np.linalg.eigvals(U)
    dev = float(np.max(np.abs(np.abs(lam) - 1.0)))
    if dev > EIG_UNIT_TOL:
        raise StatsError(f"eigenvalues off the unit circle by {dev:.2e}")
    theta = np.mod(np.angle(lam), 2 * np.pi)
    theta[theta >= 2 * np.pi] = 0.0
    return np.sort(theta)


def _one_realization(args) -> np.ndarray:
    g, sigmas, master_seed, index = args
    rng = realization_rng(master_seed, index)
    phases = rng.uniform(0.0, 2 * np.pi, size=g.B)
    return eigenphases(build_U(g, sigmas, phases))


@dataclass
class EigenphaseEnsemble:
    """Sorted eigenphase vectors, one row per realization."""

    phases: np.ndarray  # shape (n_realizations, 2B)
    master_seed: int
    metadata: dict = field(default_factory=dict)

    @property
    def n_levels(self) -> int:
        return self.phases.shape[1]

    def __len__(self) -> int:
        return self.phases.shape[0]


def sample_ensemble(g: GraphTopology, assign, n_realizations: int, master_seed: int,
                    jobs: int = 1, metadata: dict | None = None) -> EigenphaseEnsemble:
    """Eigenphases of ``n_realizations`` random-phase quantizations of ``g``.

    Realization ``i`` depends only on ``(master_seed, i)``, so the result is
    the same for any ``jobs``.
    """
    if n_realizations < 1:
        raise StatsError("need at least one realization")
    sigmas = [np.asarray(s) for s in check_assignment(g, assign)]
    work = [(g, sigmas, master_seed, i) for i in range(n_realizations)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_one_realization, work, chunksize=max(1, n_realizations // (4 * jobs))))
    else:
        rows = [_one_realization(w) for w in work]
    return EigenphaseEnsemble(np.vstack(rows), master_seed, dict(metadata or {}))


def unfold(theta) -> np.ndarray:
    """Circular nearest-neighbour spacings in units of the mean spacing.

    N sorted phases give N spacings (the last one wraps around 2 pi) which
    sum to N.
    """
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    if n < 2:
        raise StatsError("need at least two phases")
    gaps = np.diff(theta, append=theta[0] + 2 * np.pi)
    return gaps * n / (2 * np.pi)


def ensemble_spacings(ens: EigenphaseEnsemble) -> np.ndarray:
    return np.concatenate([unfold(row) for row in ens.phases])


def poisson_surrogate(n_realizations: int, n_levels: int, seed: int) -> EigenphaseEnsemble:
    """Independent uniform phases: an uncorrelated (Poisson) reference ensemble."""
    rows = [np.sort(realization_rng(seed, i).uniform(0, 2 * np.pi, n_levels))
            for i in range(n_realizations)]
    return EigenphaseEnsemble(np.vstack(rows), seed, {"family": "poisson"})


@dataclass(frozen=True)
class SpacingHistogram:
    edges: np.ndarray
    density: np.ndarray
    n_samples: int

    @property
    def mids(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def spacing_density(spacings, n_bins: int = 50, s_max: float = 4.0) -> SpacingHistogram:
    """Histogram of spacings on [0, s_max], normalized to unit integral.

    Accepts either an array of unfolded spacings or an ensemble.
    """
    if isinstance(spacings, EigenphaseEnsemble):
        spacings = ensemble_spacings(spacings)
    spacings = np.asarray(spacings, dtype=float)
    if spacings.size == 0:
        raise StatsError("no spacings")
    edges = np.linspace(0.0, s_max, n_bins + 1)
    counts, _ = np.histogram(spacings, bins=edges)
    total = counts.sum()
    density = counts / (total * np.diff(edges)) if total else np.zeros(n_bins)
    return SpacingHistogram(edges, density, int(spacings.size))


@dataclass(frozen=True)
class NumberVarianceCurve:
    L: np.ndarray
    variance: np.ndarray
    stderr: np.ndarray


def _window_counts(x: np.ndarray, n: int, starts: np.ndarray, L: float) -> np.ndarray:
    # points of the unfolded circle [0, n) inside [a, a + L), with wrap-around
    ext = np.concatenate([x, x + n])
    lo = np.searchsorted(ext, starts, side="left")
    hi = np.searchsorted(ext, starts + L, side="left")
    return hi - lo


def number_variance(ens: EigenphaseEnsemble, L_grid, windows: int = DEFAULT_WINDOWS,
                    seed: int | None = None) -> NumberVarianceCurve:
    """Variance of the level count in windows of unfolded length L.

    Window positions are drawn uniformly on the circle, ``windows`` per
    realization, from a stream derived from the ensemble seed.  The standard
    error treats the per-window squared deviations as independent.
    """
    L_grid = np.asarray(L_grid, dtype=float)
    n = ens.n_levels
    if np.any(L_grid <= 0) or np.max(L_grid) > n / 4:
        raise StatsError(f"L grid must lie in (0, {n / 4}]")
    seed = ens.master_seed if seed is None else seed
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5EED]))
    starts = rng.uniform(0.0, n, size=(len(ens), windows))
    x_all = ens.phases * n / (2 * np.pi)
    var = np.empty_like(L_grid)
    err = np.empty_like(L_grid)
    for k, L in enumerate(L_grid):
        dev2 = np.concatenate(
            [(_window_counts(x, n, st, L) - L) ** 2 for x, st in zip(x_all, starts)]
        )
        var[k] = dev2.mean()
        err[k] = dev2.std(ddof=1) / math.sqrt(dev2.size) if dev2.size > 1 else 0.0
    return NumberVarianceCurve(L_grid, var, err)


# -- random-matrix references -------------------------------------------------


def surmise_pdf(kind: str, s):
    s = np.asarray(s, dtype=float)
    if kind == "GOE":
        return (np.pi * s / 2) * np.exp(-np.pi * s**2 / 4)
    if kind == "GUE":
        return (32 * s**2 / np.pi**2) * np.exp(-4 * s**2 / np.pi)
    if kind == "POISSON":
        return np.exp(-s)
    raise ValueError(f"unknown class {kind!r}")


def surmise_cdf(kind: str, s):
    s = np.clip(np.asarray(s, dtype=float), 0.0, None)
    if kind == "GOE":
        return 1 - np.exp(-np.pi * s**2 / 4)
    if kind == "GUE":
        return special.erf(2 * s / np.sqrt(np.pi)) - (4 * s / np.pi) * np.exp(-4 * s**2 / np.pi)
    if kind == "POISSON":
        return 1 - np.exp(-s)
    raise ValueError(f"unknown class {kind!r}")


def number_variance_asymptotic(kind: str, L):
    L = np.asarray(L, dtype=float)
    base = np.log(2 * np.pi * L) + np.euler_gamma + 1
    if kind == "GOE":
        return (2 / np.pi**2) * (base - np.pi**2 / 8)
    if kind == "GUE":
        return base / np.pi**2
    if kind == "POISSON":
        return L
    raise ValueError(f"unknown class {kind!r}")


def reference_curves(kind: str, s_grid, L_grid) -> dict:
    return {"s": np.asarray(s_grid, float), "P": surmise_pdf(kind, s_grid),
            "L": np.asarray(L_grid, float), "V": number_variance_asymptotic(kind, L_grid)}


def sample_goe_surmise(n: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws from the GOE Wigner surmise."""
    return np.sqrt(-4 * np.log1p(-rng.random(n)) / np.pi)


MIN_KS_SAMPLES = 1000


def ks_distance(spacings, kind: str) -> float:
    """Kolmogorov-Smirnov distance between empirical spacings and a surmise CDF."""
    spacings = np.asarray(spacings, dtype=float)
    if spacings.size < MIN_KS_SAMPLES:
        raise StatsError(f"need >= {MIN_KS_SAMPLES} spacings, got {spacings.size}")
    return float(sps.kstest(spacings, lambda s: surmise_cdf(kind, s)).statistic)


def ks_two_sample(a, b) -> float:
    return float(sps.ks_2samp(np.asarray(a), np.asarray(b)).statistic)
