"""Surface-code decoder benchmarking: noise sampling, decoders, sweeps and estimators."""

from __future__ import annotations

from .decoders import DECODER_NAMES, make_decoder
from .harness import SweepPointRecord, SweepResult, SweepSpec, run_sweep
from .lattice import CodeLayout, ErrorState, Syndrome, build_code, extract_syndrome, logical_failure
from .noise import PAPER_DEFAULT, NoiseConfig, SeedContext, mix_seed, sample_gkp, sample_pauli
from .stats import crossing, wilson_ci

__version__ = "0.1.0"

__all__ = [
    "DECODER_NAMES",
    "PAPER_DEFAULT",
    "CodeLayout",
    "ErrorState",
    "NoiseConfig",
    "SeedContext",
    "SweepPointRecord",
    "SweepResult",
    "SweepSpec",
    "Syndrome",
    "build_code",
    "crossing",
    "extract_syndrome",
    "logical_failure",
    "make_decoder",
    "mix_seed",
    "run_sweep",
    "sample_gkp",
    "sample_pauli",
    "wilson_ci",
]
