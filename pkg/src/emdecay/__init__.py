"""Numerical companion for weighted dispersive and heat decay with scaling-critical fields.

The angular operator ``(-i grad_S + A)^2 + a`` on the unit sphere is
diagonalised, the rescaled Schroedinger and heat kernels are summed as
eigenfunction-Bessel series, and weighted ``L^1 -> L^inf`` norms of the
propagators are measured and fitted against ``t^{-n/2 - theta g}``.
"""

__version__ = "0.1.0"

from .angular import (  # noqa: E402
    AharonovBohm,
    AngularModel,
    EigenPair,
    Fourier2D,
    Free,
    InverseSquare3D,
    build_model,
    gain_exponent,
    spec_from_dict,
    spec_to_dict,
    verify_form_bounds,
    verify_sup_norm_bound,
    verify_weyl_growth,
)
from .decay import (  # noqa: E402
    DecayReport,
    GridSpec,
    SupResult,
    decay_sweep,
    fit_exponent,
    sup_constants,
    verify_interpolation,
    weighted_operator_norm,
)
from .errors import (  # noqa: E402
    CertificateError,
    ComputationError,
    DomainError,
    EmDecayError,
    HardyRangeError,
    InsufficientEigenpairsError,
    ModelRejectedError,
    OracleFailure,
    OutOfCertificateError,
    ResolutionError,
    ToleranceNotMetError,
)
from .kernel import (  # noqa: E402
    KernelSeries,
    SpacePoint,
    auto_plan,
    eval_heat_G,
    eval_schrodinger_K,
    plan,
    weighted_kernel,
)
from .propagator import (  # noqa: E402
    InitialDatum,
    PropagationResult,
    apply_heat,
    apply_schrodinger,
    heat_oracle,
)
from .special import (  # noqa: E402
    bessel_i_imag,
    bessel_i_real,
    bessel_j,
    bessel_oracle,
    log_gamma,
)
