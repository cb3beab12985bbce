"""Spectral mesh comparison toolkit.

Compares a test triangle mesh against a ground-truth mesh by the area
between their frequency spectra (the spectrum-AUC difference), with an
optional learned per-frequency-band sensitivity weighting. Ships the
full supporting pipeline: discrete Laplace-Beltrami operators, mesh
Fourier analysis, band-pass filtering, weight training against human
scores, a distortion synthesizer, classical baseline metrics, and a
correlation-evaluation harness.
"""

from .mesh import (
    Mesh,
    MeshAdjacency,
    ValidationReport,
    build_adjacency,
    center,
    cotangent_weights,
    load_mesh,
    mesh_scale,
    mixed_voronoi_areas,
    validate,
    write_mesh,
)
from .laplacian import (
    PsdReport,
    build_cotan_laplacian,
    build_laplacian,
    build_revised_cotan_laplacian,
    build_topology_laplacian,
    check_psd,
    nondelaunay_tetrahedron,
)
from .spectral import (
    FourierBasis,
    Spectrum,
    auc,
    auc_normalize,
    bandpass_reconstruct,
    eigendecompose,
    mesh_spectrum,
    prune_noise,
)
from .metric import (
    MetricOptions,
    SpectrumWeights,
    compute_spectrum,
    interp_amplitude,
    interp_weight,
    merge_frequencies,
    pair_weight_basis,
    saucd,
    segment_area,
    spectrum_saucd,
    spectrum_weighted_saucd,
    weighted_saucd,
)
from .training import TrainConfig, kfold_evaluate, soft_rank, train_weights
from .evaluation import (
    AnnotationSet,
    correlation_report,
    confidence_interval,
    iqr_filter,
    krocc,
    mean_opinion_score,
    plcc,
    srocc,
    swiss_tournament,
)
from .distortions import DistortionSpec, distortion_suite

__version__ = "0.1.0"
