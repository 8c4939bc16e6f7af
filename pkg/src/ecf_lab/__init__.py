"""Continued fractions with even partial quotients: expansions, the maps T
and R, invariant measures, the special flow over the natural extension and
renewal-time Monte Carlo."""

__version__ = "0.1.0"

from .ecf import (
    DenominatorTracker,
    EcfStream,
    RenewalRecord,
    Status,
    backward_evaluate,
    convergents,
    ecf_digit,
    ecf_expand,
    ecf_expansion,
    evaluate,
    forward_reversed,
    hat_q,
    jump_map,
    mobius_backward,
    nu_indices,
    renewal_time,
    sigma_decode,
    sigma_encode,
    tau,
)
from .errors import (
    DegenerateDenominator,
    DomainError,
    EcfError,
    EmptyCylinder,
    InsufficientDigits,
    PrecisionExhausted,
    UnboundedPrefix,
    WindowUnderflow,
)
from .euclid import euclid_convergents, euclid_expand, euclid_to_ecf, evaluate_euclid
from .reals import ExactRational, IntervalReal, MuRandomReal, parse_value
from .symbols import Convergent, EcfDigit, SigmaSymbol, format_sigma, parse_sigma
