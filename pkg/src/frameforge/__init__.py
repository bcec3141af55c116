"""Frames of weighted exponentials and of translates, built and checked numerically."""

from .config import RunConfig
from .errors import (
    CompletenessFailure,
    ConfigError,
    CorrectionInfeasible,
    DecompositionFailure,
    DegenerateWeight,
    DependencyError,
    EmptySpectrum,
    FrameForgeError,
    IllConditionedSystem,
    InductionAborted,
    InvalidArgument,
    ParameterCollapse,
    RankDeficiency,
    UndefinedRatio,
)
from .correction import CorrectionBundle, build_correction, unit_example, verify_correction
from .frame import FrameSystem, expand, verify_frame
from .grid import build_grid, make_w0, weight_u
from .induction import ConstructionResult, recheck, run_induction
from .pipeline import construct, verify
from .translate import TranslateFrame, final_weight, fourier_unitary, verify_translate_expansion, weight_unitary
from .trigpoly import TrigPoly

__version__ = "0.1.0"

__all__ = [
    "CompletenessFailure", "ConfigError", "ConstructionResult", "CorrectionBundle",
    "CorrectionInfeasible", "DecompositionFailure", "DegenerateWeight", "DependencyError",
    "EmptySpectrum", "FrameForgeError", "FrameSystem", "IllConditionedSystem", "InductionAborted",
    "InvalidArgument", "ParameterCollapse", "RankDeficiency", "RunConfig", "TranslateFrame",
    "TrigPoly", "UndefinedRatio", "build_correction", "build_grid", "construct", "expand",
    "final_weight", "fourier_unitary", "make_w0", "recheck", "run_induction", "unit_example",
    "verify", "verify_correction", "verify_frame", "verify_translate_expansion", "weight_u",
    "weight_unitary",
]
