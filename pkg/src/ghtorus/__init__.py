"""Global hypoellipticity diagnostics for systems of periodic first-order operators on the torus."""

from .conditions import growth_classify, hl_membership, hormander_check, reduction_bound_check
from .diophantine import continued_fraction, irrationality_profile, liouville_constant, sda_witness_search
from .errors import BudgetError, GhError, ValidationError
from .fourier import SpectralField, decay_fit, partial_fourier, synthesize_lacunary
from .gw import exact_resonance_certificate, gw_scan, homogeneous_classify, resonance_sets, single_operator_gh
from .model import FreqWindow, SystemSpec, ToleranceSet, load_system, validate_system
from .solver import apply_operator, kernel_witness, mixed_witness, normal_form_map, solve_mode
from .verdict import Verdict, classify, emit_report

__all__ = [
    "BudgetError",
    "FreqWindow",
    "GhError",
    "SpectralField",
    "SystemSpec",
    "ToleranceSet",
    "ValidationError",
    "Verdict",
    "apply_operator",
    "classify",
    "continued_fraction",
    "decay_fit",
    "emit_report",
    "exact_resonance_certificate",
    "growth_classify",
    "gw_scan",
    "hl_membership",
    "homogeneous_classify",
    "hormander_check",
    "irrationality_profile",
    "kernel_witness",
    "liouville_constant",
    "load_system",
    "mixed_witness",
    "normal_form_map",
    "partial_fourier",
    "reduction_bound_check",
    "resonance_sets",
    "sda_witness_search",
    "single_operator_gh",
    "solve_mode",
    "synthesize_lacunary",
    "validate_system",
]
