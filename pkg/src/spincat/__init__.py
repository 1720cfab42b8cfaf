"""spincat: simulator and analysis toolkit for spin-cat qudit error correction.

A six-level spin-5/2 manifold hosts a logical qubit in spin-cat codewords; a
measurement-free pulse sequence on the composite internal/motional space
recovers first-order dephasing errors.  The package provides the operator
algebra, noise channels, codeword and Knill-Laflamme machinery, the recovery
sequence, closed-form fidelity analytics, MLE tomography, and a deterministic
experiment harness with a CLI.
"""

__version__ = "0.1.0"

from .analytics import (
    ErrorFit,
    LifetimeResult,
    delta_for_offset,
    f_corrected,
    f_corrected_with_delta,
    f_encoded,
    f_physical,
    fit_error_curve,
    lambda_ratio,
    offset_for_delta,
    uhlmann_fidelity,
    useful_lifetime,
)
from .channels import (
    MU_B_OVER_HBAR,
    DephasingParams,
    ErrorOperatorSet,
    dephase,
    dephasing_params,
    error_operator_set,
    quadrupole_unitary,
    sample_error_unitary,
)
from .code import (
    CodewordPair,
    KLReport,
    LogicalQubit,
    decode_unitary,
    encode_unitary,
    hamming_saturation,
    kl_conditions,
    prepare_logical,
    spin_cat_codewords,
)
from .correction import (
    CompositeState,
    CorrectionConfig,
    CorrectionReport,
    apply_correction,
    blue_sideband_pi,
    carrier_pi,
    correct_second_order,
    detect_erasure,
    heat,
    lift,
)
from .spinops import (
    D52,
    GROUND,
    AngularMomentumOps,
    DensityMatrix,
    Operator,
    SpinError,
    SpinManifold,
    angular_momentum_ops,
    expm_antihermitian,
    su2_rotation,
)
from .tomography import (
    MeasurementRecord,
    MeasurementSetting,
    MLEResult,
    bootstrap_fidelity,
    default_settings,
    mle_reconstruct,
    projector_set,
    simulate_measurements,
)
