"""Mesh Fourier analysis: eigendecomposition of a Laplacian into an
orthonormal frequency basis, per-frequency amplitudes of the vertex
signal, band-pass reconstruction, high-frequency pruning, and
area-under-curve normalization of the spectrum."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import sparse

from .mesh import Mesh, center

__all__ = [
    "FourierBasis",
    "Spectrum",
    "eigendecompose",
    "mesh_spectrum",
    "bandpass_reconstruct",
    "prune_noise",
    "auc",
    "auc_normalize",
    "write_spectrum_csv",
    "read_spectrum_csv",
]


@dataclass(frozen=True)
class FourierBasis:
    """Orthonormal eigenvector matrix U (columns) with ascending
    eigenvalues; U^T is the Fourier operator for signals on the mesh."""

    eigenvectors: np.ndarray
    frequencies: np.ndarray

    @property
    def n(self) -> int:
        return len(self.frequencies)


@dataclass(frozen=True)
class Spectrum:
    """Frequency / amplitude pairs, ascending in frequency.

    ``coeffs`` optionally keeps the raw (N, 3) Fourier coefficients for
    reconstruction. ``normalized`` marks a spectrum whose area under the
    piecewise-linear curve has been scaled to 1.
    """

    freqs: np.ndarray
    amps: np.ndarray
    coeffs: np.ndarray | None = None
    normalized: bool = False

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=np.float64)
        amps = np.asarray(self.amps, dtype=np.float64)
        if freqs.shape != amps.shape or freqs.ndim != 1:
            raise ValueError("freqs and amps must be 1-D arrays of equal length")
        if len(freqs) and np.any(np.diff(freqs) < 0):
            raise ValueError("frequencies must be ascending")
        if np.any(amps < 0):
            raise ValueError("amplitudes must be non-negative")
        if not (np.all(np.isfinite(freqs)) and np.all(np.isfinite(amps))):
            raise ValueError("spectrum entries must be finite")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "amps", amps)

    def __len__(self) -> int:
        return len(self.freqs)


def eigendecompose(L, clamp_tol: float = 1e-10) -> FourierBasis:
    """Full symmetric eigendecomposition with a deterministic sign
    convention: each eigenvector is flipped so its largest-magnitude
    entry is positive.

    Eigenvalues within ``clamp_tol`` times the largest eigenvalue of zero
    are rounding artifacts of a semidefinite operator's nullspace and are
    clamped to exactly zero. Genuinely negative eigenvalues (the
    classical cotangent operator can produce them) are kept.
    """
    dense = L.toarray() if sparse.issparse(L) else np.asarray(L, dtype=np.float64)
    lam, U = np.linalg.eigh(dense)
    if not np.all(np.isfinite(lam)):
        raise RuntimeError("eigensolver did not converge")
    pick = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pick, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    U = U * signs
    if len(lam):
        tiny = np.abs(lam) <= clamp_tol * max(lam.max(), 0.0)
        lam = np.where(tiny, 0.0, lam)
    return FourierBasis(eigenvectors=U, frequencies=lam)


def mesh_spectrum(mesh: Mesh, basis: FourierBasis) -> Spectrum:
    """Amplitudes of the vertex coordinate signal in the given basis.

    The mesh is centered first so the zero-frequency coefficient does not
    encode translation. Amplitude i is the Euclidean norm of row i of
    G = U^T v; Parseval gives sum(F^2) = sum(|v|^2) for the centered
    coordinates.
    """
    if basis.n != mesh.n_vertices:
        raise ValueError(
            f"basis dimension {basis.n} does not match vertex count {mesh.n_vertices}"
        )
    v = center(mesh).vertices
    coeffs = basis.eigenvectors.T @ v
    amps = np.linalg.norm(coeffs, axis=1)
    return Spectrum(freqs=basis.frequencies.copy(), amps=amps, coeffs=coeffs)


def bandpass_reconstruct(mesh: Mesh, basis: FourierBasis, lam_lo: float, lam_hi: float) -> Mesh:
    """Rebuild vertex positions from the Fourier coefficients whose
    frequency lies in [lam_lo, lam_hi]; the input centroid is re-added so
    the result sits where the input was."""
    if lam_lo > lam_hi:
        raise ValueError("band must satisfy lam_lo <= lam_hi")
    if basis.n != mesh.n_vertices:
        raise ValueError("basis does not match mesh")
    keep = (basis.frequencies >= lam_lo) & (basis.frequencies <= lam_hi)
    if not keep.any():
        raise ValueError(
            f"band [{lam_lo}, {lam_hi}] retains no frequencies "
            f"(spectrum spans [{basis.frequencies[0]}, {basis.frequencies[-1]}])"
        )
    centroid = mesh.centroid()
    coeffs = basis.eigenvectors.T @ (mesh.vertices - centroid)
    coeffs[~keep] = 0.0
    return mesh.with_vertices(basis.eigenvectors @ coeffs + centroid)


def prune_noise(spectrum: Spectrum, portion: float) -> Spectrum:
    """Drop the ceil(portion * len) highest-frequency entries."""
    if not 0.0 <= portion < 1.0:
        raise ValueError("portion must be in [0, 1)")
    k = int(np.ceil(portion * len(spectrum)))
    if k == 0:
        return spectrum
    if k >= len(spectrum):
        raise ValueError("pruning would remove the entire spectrum")
    coeffs = spectrum.coeffs[:-k] if spectrum.coeffs is not None else None
    return replace(
        spectrum, freqs=spectrum.freqs[:-k], amps=spectrum.amps[:-k], coeffs=coeffs
    )


def auc(spectrum: Spectrum) -> float:
    """Trapezoid-rule area under the piecewise-linear amplitude curve."""
    if len(spectrum) < 2:
        raise ValueError("AUC needs at least 2 spectrum entries")
    return float(np.trapezoid(spectrum.amps, spectrum.freqs))


def auc_normalize(spectrum: Spectrum) -> Spectrum:
    """Rescale so the area under the curve is 1: with A the current area,
    frequencies shrink by A^2 and amplitudes grow by A. Equivalent to
    uniformly scaling the mesh by 1/A, so spectra of rescaled copies of a
    shape coincide after normalization. Idempotent."""
    area = auc(spectrum)
    if area <= 0.0:
        raise ValueError("AUC must be positive to normalize")
    return replace(
        spectrum,
        freqs=spectrum.freqs / (area * area),
        amps=spectrum.amps * area,
        coeffs=None,
        normalized=True,
    )


def write_spectrum_csv(spectrum: Spectrum, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "amplitude"])
        for lam, amp in zip(spectrum.freqs, spectrum.amps):
            writer.writerow([f"{lam:.17g}", f"{amp:.17g}"])


def read_spectrum_csv(path) -> Spectrum:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["lambda", "amplitude"]:
        raise ValueError(f"{path}: expected header 'lambda,amplitude'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=np.float64)
    return Spectrum(freqs=data[:, 0], amps=data[:, 1])
