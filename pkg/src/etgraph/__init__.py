"""Quantum graphs with equi-transmitting vertex scattering matrices.

Submodules: ``numerics`` (dense kernels), ``scatmat`` (scattering matrices),
``graph`` (topologies), ``quantize`` (U, M, W), ``spectral`` (classical
spectra and gaps), ``stats`` (random-phase spectral statistics) and ``cli``.
"""
from .graph import GraphTopology, complete_graph, connectivity_spectrum, random_regular
from .quantize import build_M, build_U, build_W
from .scatmat import (
    ScatteringMatrix,
    build_fourier,
    build_neumann,
    et_five,
    et_from_character,
    et_from_hadamard,
    et_search,
)
from .spectral import spectrum_direct, spectrum_via_theorem

__version__ = "0.1.0"

__all__ = [
    "GraphTopology", "complete_graph", "connectivity_spectrum", "random_regular",
    "build_M", "build_U", "build_W",
    "ScatteringMatrix", "build_fourier", "build_neumann", "et_five",
    "et_from_character", "et_from_hadamard", "et_search",
    "spectrum_direct", "spectrum_via_theorem",
]
