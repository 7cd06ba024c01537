"""Exact verification of logarithmic twisted modules and their C_n-cofiniteness."""
from .errors import (CutoffTooSmall, IllFormedProduct, InvalidExponent, LogResidueAmbiguity,
                     NonInvertible, NonRootOfUnitySpectrum, NonTerminatingBudget, NotAutomorphism,
                     PreconditionViolated, TableIncomplete, TwistVOAError)
from .exactalg import TAU, TWO_PI_I, GradedOperator, Scalar, Vec
from .examples import build
from .logcalc import Exponent, LogSeries, MultiSeries
from .report import CheckReport
from .rewrite import (ModeAlgebra, ModeExpression, SpanningCertificate, c2_mode_expand,
                      cn_quotient_dim, cn_subspace, commutator_expand, normal_order, repeats_reduce,
                      spanning_normalize)
from .twisted import TwistedModuleData, check_axioms, check_derived, lower_mode_rewrite
from .voa import AutomorphismData, C2Report, VOAData, compute_c2, decompose_automorphism

from types import ModuleType as _Module

__all__ = sorted(n for n, v in dict(globals()).items() if not n.startswith("_") and not isinstance(v, _Module))
