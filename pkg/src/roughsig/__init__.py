"""Signature engine and Monte Carlo laboratory for iterated sums of weakly
dependent stationary processes and their Gaussian rough-path limits."""

__version__ = "0.1.0"

from .tensor import (  # noqa: F401
    TensorLevel,
    TruncatedTensor,
    chen_concat,
    chen_inverse,
    level_norm,
    tensor_product,
)
from .signature import (  # noqa: F401
    PathSample,
    PrefixTable,
    SignatureIncrement,
    brute_force_signature,
    iterated_sum_prefix,
    signature_increment,
    suspension_signature,
)
from .processes import (  # noqa: F401
    MixingTable,
    ProcessSpec,
    RngStream,
    SuspensionSample,
    SuspensionSpec,
    approximation_rate,
    mixing_coefficients,
    sample_path,
    sample_paths,
    sample_suspension,
)
from .limits import (  # noqa: F401
    GaussianRoughPath,
    LimitModel,
    estimate_limit_model,
    exact_chain_limit_model,
    exact_suspension_limit_model,
    lyons_extension,
    sample_brownian,
)
from .norms import (  # noqa: F401
    ControlFunction,
    MatrixIncrements,
    VectorIncrements,
    beta_lower_bound,
    control_function,
    factorial_bound_check,
    hoelder_ratio,
    p_variation,
)
from .distances import cdf_distance, prokhorov_upper, wasserstein1_scalar  # noqa: F401
from .blocks import BlockScheme, block_sums, build_scheme, charfn_gap, default_w_grid  # noqa: F401
from .experiments import DecayFit, ExperimentConfig, chen_audit, fit_decay, run_experiment  # noqa: F401
