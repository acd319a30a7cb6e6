"""Sum-of-squares and moment lower bounds for bosonic Hamiltonians."""

from .fock import FockCutoff, represent, represent_word, variational_upper_bound
from .moments import (
    MonomialBasis,
    RelaxationResult,
    SosCertificate,
    SosInfeasibleError,
    count_monomials,
    lower_bound,
    make_g,
    min_perturbation,
    omega_moments,
    sos_certify,
)
from .polyparse import ParseError, builtin_quartic, harmonic, parse, parse_poly, schmudgen
from .sdp import SdpConfig, SdpProblem, SdpSolution, Status, solve
from .weyl import NormalIndex, Word, WeylPolynomial, adjoint, degree, l1_norm, multiply, normal_form

__all__ = [
    "FockCutoff",
    "represent",
    "represent_word",
    "variational_upper_bound",
    "MonomialBasis",
    "RelaxationResult",
    "SosCertificate",
    "SosInfeasibleError",
    "count_monomials",
    "lower_bound",
    "make_g",
    "min_perturbation",
    "omega_moments",
    "sos_certify",
    "ParseError",
    "builtin_quartic",
    "harmonic",
    "parse",
    "parse_poly",
    "schmudgen",
    "SdpConfig",
    "SdpProblem",
    "SdpSolution",
    "Status",
    "solve",
    "NormalIndex",
    "Word",
    "WeylPolynomial",
    "adjoint",
    "degree",
    "l1_norm",
    "multiply",
    "normal_form",
]
