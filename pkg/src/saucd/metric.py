"""Spectrum-AUC-difference distances between two meshes.

The distance is the area of the non-overlapping region between the two
piecewise-linear spectrum curves: both spectra are resampled onto the
sorted union of their frequencies, and each inter-frequency segment
contributes a trapezoid when the amplitude difference keeps its sign and
the two-triangle area when it crosses zero. The human-adjusted variant
multiplies each segment by a sensitivity weight interpolated from 20
knots spanning the normalized frequency range [0, 0.05]; the distance is
linear in those knot values, which the training code exploits through
``spectrum_weight_basis``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .laplacian import LAPLACIAN_VARIANTS, build_laplacian
from .mesh import Mesh
from .spectral import Spectrum, auc_normalize, eigendecompose, mesh_spectrum, prune_noise

__all__ = [
    "N_WEIGHT_KNOTS",
    "WEIGHT_KNOT_FREQS",
    "SpectrumWeights",
    "MetricOptions",
    "merge_frequencies",
    "interp_amplitude",
    "segment_area",
    "interp_weight",
    "compute_spectrum",
    "spectrum_saucd",
    "saucd",
    "spectrum_weighted_saucd",
    "weighted_saucd",
    "spectrum_weight_basis",
    "pair_weight_basis",
]

N_WEIGHT_KNOTS = 20
WEIGHT_KNOT_FREQS = np.linspace(0.0, 0.05, N_WEIGHT_KNOTS)
WEIGHT_KNOT_FREQS.setflags(write=False)


@dataclass(frozen=True)
class SpectrumWeights:
    """Per-frequency-band sensitivity: 20 values at knots uniformly
    spanning [0, 0.05]; between knots the weight is linear, beyond the
    last knot it stays at the last value."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (N_WEIGHT_KNOTS,):
            raise ValueError(f"weights must have exactly {N_WEIGHT_KNOTS} values")
        if not np.all(np.isfinite(vals)):
            raise ValueError("weights must be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def uniform(cls, value: float = 1.0) -> "SpectrumWeights":
        return cls(np.full(N_WEIGHT_KNOTS, float(value)))

    @classmethod
    def load(cls, path) -> "SpectrumWeights":
        data = json.loads(Path(path).read_text())
        if not isinstance(data, list):
            raise ValueError(f"{path}: weights file must be a JSON array")
        return cls(np.asarray(data, dtype=np.float64))

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps([float(v) for v in self.values], indent=2) + "\n"
        )

    def clamped(self) -> "SpectrumWeights":
        """Negative knots clamped to zero (applied to released weights)."""
        return SpectrumWeights(np.maximum(self.values, 0.0))


@dataclass(frozen=True)
class MetricOptions:
    """Pipeline knobs: high-frequency prune portion, AUC normalization,
    Laplacian variant, and the energy-difference ablation (compares
    squared amplitudes instead of amplitudes)."""

    prune_portion: float = 0.001
    normalize: bool = True
    laplacian: str = "revised"
    energy_difference: bool = False

    def __post_init__(self):
        if not 0.0 <= self.prune_portion < 1.0:
            raise ValueError("prune_portion must be in [0, 1)")
        if self.laplacian not in LAPLACIAN_VARIANTS:
            raise ValueError(
                f"unknown Laplacian variant {self.laplacian!r}; "
                f"expected one of {LAPLACIAN_VARIANTS}"
            )

    def as_dict(self) -> dict:
        return {
            "prune_portion": self.prune_portion,
            "normalize": self.normalize,
            "laplacian": self.laplacian,
            "energy_difference": self.energy_difference,
        }


def merge_frequencies(spec_a: Spectrum, spec_b: Spectrum) -> np.ndarray:
    """Sorted multiset union of the two frequency arrays (duplicates kept)."""
    if len(spec_a) == 0 or len(spec_b) == 0:
        raise ValueError("cannot merge empty spectra")
    return np.sort(np.concatenate([spec_a.freqs, spec_b.freqs]), kind="stable")


def interp_amplitude(spectrum: Spectrum, lam) -> np.ndarray | float:
    """Amplitude of the piecewise-linear spectrum curve at ``lam``:
    exact at stored frequencies, linear between neighbors, clamped to the
    endpoint amplitude outside the stored range."""
    if len(spectrum) == 0:
        raise ValueError("empty spectrum")
    out = np.interp(lam, spectrum.freqs, spectrum.amps)
    return float(out) if np.isscalar(lam) else out


def segment_area(h_prev: float, h_cur: float, dlam: float) -> float:
    """Area between two piecewise-linear curves over one segment, given
    the signed amplitude differences at its ends.

    Same sign: trapezoid |h_prev + h_cur| * dlam / 2. Opposite signs: the
    difference crosses zero inside the segment and the region is two
    triangles with total area (h_prev^2 + h_cur^2) / (2 (|h_prev| +
    |h_cur|)) * dlam.
    """
    if dlam < 0:
        raise ValueError("segment width must be non-negative")
    return float(_segment_areas(np.array([h_prev, h_cur]), np.array([0.0, dlam]))[0])


def _segment_areas(h: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Vectorized per-segment areas for difference values h at ascending
    frequencies lam."""
    h0 = h[:-1]
    h1 = h[1:]
    dlam = np.diff(lam)
    same_sign = h0 * h1 >= 0.0
    trap = 0.5 * np.abs(h0 + h1) * dlam
    denom = np.abs(h0) + np.abs(h1)
    # denom > 0 wherever signs are strictly opposite
    tri = np.divide(
        (h0 * h0 + h1 * h1) * dlam,
        2.0 * denom,
        out=np.zeros_like(dlam),
        where=denom > 0.0,
    )
    return np.where(same_sign, trap, tri)


def interp_weight(weights: SpectrumWeights, lam) -> np.ndarray | float:
    """Sensitivity weight at frequency ``lam``: linear between the 20
    knots, w_0 at zero, and the last knot's value beyond 0.05."""
    out = np.interp(lam, WEIGHT_KNOT_FREQS, weights.values)
    return float(out) if np.isscalar(lam) else out


def compute_spectrum(mesh: Mesh, options: MetricOptions | None = None) -> Spectrum:
    """Per-mesh half of the metric pipeline: center, build the chosen
    Laplacian, eigendecompose, take amplitudes, prune the highest
    frequencies, and normalize the area under the curve to 1."""
    options = options or MetricOptions()
    L = build_laplacian(mesh, options.laplacian)
    basis = eigendecompose(L)
    spec = mesh_spectrum(mesh, basis)
    spec = prune_noise(spec, options.prune_portion)
    if options.normalize:
        spec = auc_normalize(spec)
    return spec


def _difference_values(spec_test: Spectrum, spec_gt: Spectrum, energy: bool):
    merged = merge_frequencies(spec_test, spec_gt)
    f_test = np.interp(merged, spec_test.freqs, spec_test.amps)
    f_gt = np.interp(merged, spec_gt.freqs, spec_gt.amps)
    if energy:
        f_test = f_test * f_test
        f_gt = f_gt * f_gt
    return merged, f_test - f_gt


def spectrum_saucd(spec_test: Spectrum, spec_gt: Spectrum, energy_difference: bool = False) -> float:
    """Spectrum-AUC difference between two already-processed spectra."""
    merged, h = _difference_values(spec_test, spec_gt, energy_difference)
    return float(_segment_areas(h, merged).sum())


def saucd(mesh_test: Mesh, mesh_gt: Mesh, options: MetricOptions | None = None) -> float:
    """Spectrum-AUC difference between two meshes (full pipeline).

    Symmetric in its arguments, zero for identical inputs, and invariant
    to rigid motion; with normalization on it is also invariant to
    uniform scaling of either mesh.
    """
    options = options or MetricOptions()
    spec_test = compute_spectrum(mesh_test, options)
    spec_gt = compute_spectrum(mesh_gt, options)
    return spectrum_saucd(spec_test, spec_gt, options.energy_difference)


def spectrum_weighted_saucd(
    spec_test: Spectrum,
    spec_gt: Spectrum,
    weights: SpectrumWeights,
    energy_difference: bool = False,
) -> float:
    """Weighted variant: each segment's area is multiplied by the
    sensitivity weight at the segment's left endpoint frequency."""
    merged, h = _difference_values(spec_test, spec_gt, energy_difference)
    areas = _segment_areas(h, merged)
    w = np.interp(merged[:-1], WEIGHT_KNOT_FREQS, weights.values)
    return float(np.dot(w, areas))


def weighted_saucd(
    mesh_test: Mesh,
    mesh_gt: Mesh,
    weights: SpectrumWeights,
    options: MetricOptions | None = None,
) -> float:
    """Human-adjusted distance between two meshes; reduces to ``saucd``
    when all weights are 1."""
    options = options or MetricOptions()
    spec_test = compute_spectrum(mesh_test, options)
    spec_gt = compute_spectrum(mesh_gt, options)
    return spectrum_weighted_saucd(
        spec_test, spec_gt, weights, options.energy_difference
    )


def spectrum_weight_basis(
    spec_test: Spectrum, spec_gt: Spectrum, energy_difference: bool = False
) -> np.ndarray:
    """Decompose the weighted distance into knot contributions: a
    20-vector b with b . w == spectrum_weighted_saucd(..., w) for every
    weight vector w, because the weight interpolation is linear in the
    knot values."""
    merged, h = _difference_values(spec_test, spec_gt, energy_difference)
    areas = _segment_areas(h, merged)
    lam = merged[:-1]
    basis = np.zeros(N_WEIGHT_KNOTS)
    dk = WEIGHT_KNOT_FREQS[1] - WEIGHT_KNOT_FREQS[0]
    idx = np.clip(
        np.searchsorted(WEIGHT_KNOT_FREQS, lam, side="right") - 1, 0, N_WEIGHT_KNOTS - 1
    )
    frac = np.clip((lam - WEIGHT_KNOT_FREQS[idx]) / dk, 0.0, 1.0)
    frac[idx == N_WEIGHT_KNOTS - 1] = 0.0
    np.add.at(basis, idx, (1.0 - frac) * areas)
    np.add.at(basis, np.minimum(idx + 1, N_WEIGHT_KNOTS - 1), frac * areas)
    return basis


def pair_weight_basis(
    mesh_test: Mesh, mesh_gt: Mesh, options: MetricOptions | None = None
) -> np.ndarray:
    """Knot-contribution vector for a mesh pair (see
    ``spectrum_weight_basis``)."""
    options = options or MetricOptions()
    spec_test = compute_spectrum(mesh_test, options)
    spec_gt = compute_spectrum(mesh_gt, options)
    return spectrum_weight_basis(spec_test, spec_gt, options.energy_difference)
