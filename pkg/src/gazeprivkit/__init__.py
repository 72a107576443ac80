"""Privacy toolkit for temporally correlated eye-movement feature signals.

Laplace-style release mechanisms in the time and frequency domains, utility
and correlation evaluation of the released signals, identity-leakage probes,
a two-party randomized-encoding protocol for kernel computation, and the
upstream gaze feature pipeline (event detection, smoothing, ray-cast object
attention, windowed features).
"""

from .errors import (
    DegenerateDenominatorError,
    DuplicateRowError,
    HandshakeError,
    KernelIntegrityError,
    ProtocolError,
    RowParseError,
    SchemaError,
    SpectralConsistencyError,
    UndefinedCorrelationError,
)
from .spectral import Spectrum, dft, idft_padded
from .mechanisms import (
    MECHANISMS,
    FeatureSignal,
    PrivacyBudget,
    SensitivityTable,
    aggregate_transform,
    budget_with,
    cfpa,
    chunk_boundaries,
    composed_epsilon,
    compute_sensitivity_table,
    dcfpa,
    difference_transform,
    fpa,
    fpa_scale,
    laplace_from_uniform,
    laplace_sample,
    laplace_vector,
    lpa,
    lpa_scale,
    privatize,
    query_sensitivity,
)
from .datasets import (
    Dataset,
    RegressionSet,
    gen_ar1_dataset,
    gen_regression_set,
    parse_feature_csv,
    parse_samples_csv,
    write_feature_csv,
    write_samples_csv,
)
from .evaluation import (
    CorrelationProfile,
    UtilityReport,
    clamp_budget,
    correlation_profile,
    evaluate_mechanism,
    lag_autocorrelation,
    nmse,
    optimal_k,
    optimal_k_table,
    reports_to_csv,
    reports_to_json,
    utility_score,
)
from .leakage import (
    LabeledWindowSet,
    LoocvReport,
    PersonIdReport,
    knn_classify,
    leakage_report_to_csv,
    leakage_report_to_json,
    loocv_person,
    person_id_eval,
    subsample_windows,
    windows_from_dataset,
)
from .pipeline import (
    AttentionRecord,
    Collider,
    EventSegment,
    EventThresholds,
    GazeSample,
    RayHit,
    WINDOW_FEATURES,
    WindowFeatures,
    detect_events,
    divisive_baseline,
    gaze_hits,
    interpolate_gaps,
    ooi_attention,
    pupil_series,
    ray_cast,
    sg_smooth,
    window_features,
)
from .reprotocol import (
    EncodedShare,
    KernelRidgeModel,
    MaskTriple,
    PartyData,
    ProtocolConfig,
    ProtocolResult,
    Transcript,
    assemble_kernel,
    communication_cost_bytes,
    decode_cross_gram,
    encode_alice,
    encode_bob,
    gen_masks,
    krr_fit_predict,
    mean_angular_error,
    pitchyaw_to_vector,
    plaintext_reference,
    rbf_cross,
    rbf_from_linear_gram,
    run_protocol,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
