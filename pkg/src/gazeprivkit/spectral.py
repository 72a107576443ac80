"""Non-unitary discrete Fourier transform with truncated, zero-padded inversion.

Conventions are fixed package-wide: forward ``F_j = sum_t x_t exp(-2i pi j t / n)``
with no scaling, inverse carrying the ``1/n`` factor. ``numpy.fft`` implements
exactly this pair.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpectralConsistencyError

# Residue/symmetry tolerance for "this inverse should have been real".
_RESIDUE_REL = 1e-6


@dataclass(frozen=True)
class Spectrum:
    """DFT coefficients of a real signal plus the length they came from."""

    coefficients: np.ndarray
    original_length: int

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coefficients, dtype=np.complex128)
        object.__setattr__(self, "coefficients", coeffs)
        if coeffs.ndim != 1:
            raise ValueError("coefficients must be one-dimensional")
        if self.original_length < 1:
            raise ValueError("original_length must be >= 1")
        if len(coeffs) > self.original_length:
            raise ValueError("more coefficients than original_length")

    def __len__(self) -> int:
        return len(self.coefficients)


def dft(signal: np.ndarray) -> Spectrum:
    """Forward transform of a finite real signal; returns all n coefficients."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("signal must be a nonempty 1-d real sequence")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal contains non-finite values")
    return Spectrum(np.fft.fft(x), len(x))


def _conjugate_symmetric(coeffs: np.ndarray) -> bool:
    """True when coeffs could be the full DFT of a real signal."""
    n = len(coeffs)
    scale = float(np.max(np.abs(coeffs))) if n else 0.0
    tol = _RESIDUE_REL * max(scale, 1e-300)
    if abs(coeffs[0].imag) > tol:
        return False
    if n == 1:
        return True
    return bool(np.all(np.abs(coeffs[1:] - np.conj(coeffs[:0:-1])) <= tol))


def idft_padded(spectrum: Spectrum, k: int, n: int) -> np.ndarray:
    """Inverse transform of the first ``k`` coefficients zero-padded to length ``n``.

    Returns the real part. When the full spectrum of a real signal is passed
    (k == n and conjugate symmetry holds) the imaginary residue is asserted to be
    negligible before it is discarded; a larger residue means the transform code
    itself is broken. Truncated or independently perturbed spectra are expected
    to have genuine imaginary parts and skip the check.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if k < 1 or k > n:
        raise ValueError(f"k must satisfy 1 <= k <= n, got k={k}, n={n}")
    if k > len(spectrum):
        raise ValueError(f"spectrum holds {len(spectrum)} coefficients, need {k}")
    padded = np.zeros(n, dtype=np.complex128)
    padded[:k] = spectrum.coefficients[:k]
    out = np.fft.ifft(padded)
    if k == n and _conjugate_symmetric(padded):
        residue = float(np.max(np.abs(out.imag)))
        limit = _RESIDUE_REL * max(float(np.max(np.abs(out.real))), 1e-300)
        if residue > limit:
            raise SpectralConsistencyError(
                f"imaginary residue {residue:.3e} exceeds {limit:.3e} on a symmetric spectrum"
            )
    return np.ascontiguousarray(out.real)
