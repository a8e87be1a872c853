"""gachagt: a sparse boolean recovery (group testing) toolkit.

Builds the birthday-coded Gacha scheme end to end: GF(2^w) polynomial outer
codes, constant-weight and linear-code inner layers, channel symmetrization,
composition gadgets, baseline decoders, and a seeded simulation CLI.
"""

__version__ = "0.1.0"

from .core_model import ConfigMatrix, ProblemInstance, TrialMetrics, run_tests, sample_instance, score
from .gf2e import FieldSpec, InsufficientEvaluations, field
from .channels import (
    DiscreteChannel,
    SymmetrizerPlan,
    ZeroCapacityError,
    apply_symmetrized,
    make_channel,
    parse_channel_spec,
    plan_symmetrize,
)
from .inner_code import (
    BinaryLinearCode,
    ConstantWeightCode,
    ERASURE,
    Occupancy,
    UnsupportedCodeSize,
    WeightClassifier,
    or_weight_identity_check,
)
from .gacha_core import (
    COLLISION,
    GachaParams,
    SynthWord,
    analytic_budget,
    build_column,
    build_matrix,
    decode_pipeline,
    default_params,
    gacha_scheme,
    list_decode,
    synthesize,
)
from .scheme import SchemeHandle
from .gadgets import (
    GadgetParams,
    expander_build,
    fault_injected,
    identity_scheme,
    parallel_build,
    pyramid_build,
    serial_build,
)
from .baselines import OracleResult, brute_force_decode, comp_decode
