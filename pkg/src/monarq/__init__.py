"""Expectation-value encoded data processing on a simulated qubit register."""

from .analysis import (
    CalibrationResult,
    NoiseFit,
    calibrate_and_score,
    fit_noise_model,
    oracle_dtft,
    oracle_edge,
    oracle_edge_ev,
    oracle_pointwise_product,
    oracle_sqgrad,
    oracle_sqgrad_image,
)
from .circuit import (
    Circuit,
    CountsTable,
    Gate,
    NoiseConfig,
    StateVector,
    conditional_expectation_z,
    run_noisy_trajectories,
    run_statevector,
    sample_counts,
)
from .ehands import (
    ArithmeticTap,
    append_negation,
    append_product,
    append_weighted_sum,
    resource_reference,
)
from .errors import (
    CapacityError,
    DataFormatError,
    DegenerateCalibrationError,
    DomainError,
    IncompleteResultError,
    MissingAddressError,
    MonarqError,
)
from .even import EvenEstimate, EvenEstimates, estimate_from_counts, value_to_angle
from .pipelines import (
    GrayImage,
    PipelineJob,
    Spectrum,
    build_conv,
    build_dtft,
    build_edge_tile,
    build_qcrank_job,
    build_sqgrad,
    chirp_signal,
    execute_job,
    plan_tiles,
    run_conv,
    run_dtft,
    run_edge_image,
    run_sqgrad_image,
    tile_and_stitch,
)
from .qcrank import QcrankLayout, build_qcrank, decode_qcrank, decode_qcrank_exact, plan_layout

__version__ = "0.1.0"
