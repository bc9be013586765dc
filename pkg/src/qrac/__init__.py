"""Quantum and classical random access codes built from mutually unbiased bases."""
__version__ = "0.1.0"

from .codes import (
    CodeParams,
    EncodingScheme,
    Measurement,
    QracCode,
    all_inputs,
    build_classical_rac,
    build_improved_qrac,
    build_insphere_qrac,
    composite_qrac,
    load_code,
    predicted_p,
    save_code,
)
from .errors import (
    BoundViolationError,
    InvalidDimensionError,
    InvalidInputError,
    InvalidScaleError,
    NotParityObliviousError,
    QracError,
    SearchSpaceTooLargeError,
)
from .evaluate import EvalReport, exact_report, monte_carlo, p_q_to_c
from .field import GaloisField, field_new
from .lambda_opt import LambdaResult, apply_scaling, lambda_exhaustive, lambda_random, subset_search
from .mub import mub_construct, verify_mub
from .orthoarray import oa_construct, verify_oa
from .parity import joint_prob, verify_parity_oblivious

import types as _types

__all__ = sorted(
    name for name, value in globals().items() if not name.startswith("_") and not isinstance(value, _types.ModuleType)
)
