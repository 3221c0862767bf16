"""Certification, completion, parametrization and factorization of
discrete-time all-pass rational matrix functions ``C (zI - A)^{-1} B + D``."""

__version__ = "0.1.0"

from .certificate import (AllPassVerdict, Certificate, certificate, complete_from_B,
                          complete_from_BC, complete_from_C, is_allpass, normalize_D)
from .deflate import (Deflation, DeflationStep, compose_step, deflate_at_infinity,
                      qbar_realization, recompose, silverman_step)
from .exceptions import (AllPassError, ClmiError, DimensionError, NotAllPassError,
                         NotInvariantError, NotMinimalError, NotObservableError,
                         NotReachableError, PoleError, PreconditionError)
from .factor import (Divisor, Factorization, biproper_left_divisor, biproper_right_divisor,
                     complementary_pair_check, enumerate_divisors, factorize, left_divisor,
                     right_divisor)
from .linalg import (Inertia, SteinSolutionSet, Subspace, inertia, invariant_subspaces,
                     is_unmixed, pinv, polar_orthogonal, psd_rank_factor, solve_stein_sym)
from .lmi import (ClmiReport, DeltaSpace, LmiSolutionP, LmiSolutionQ, M_of, N_of, check_clmi,
                  complementary, delta_space, enumerate_solutions, nonsingular_family_member,
                  riccati_residual_P, riccati_residual_Q, solution_from_subspace_P,
                  solution_from_subspace_Q)
from .realization import (DegreeReport, StateSpace, allpass_defect, evaluate,
                          minimal_realization, series)
