"""Minimum drawdown-probability toolkit for reinsured surplus processes.

Computes the optimal retention functions, adjustment coefficients, the
closed-form diffusion drawdown probability with its explicit
O(n^{-1/2}) sandwich bounds, and verifies everything against exact Monte
Carlo simulation of the scaled compound Poisson surplus and a Picard
fixed-point oracle.
"""

from .adjustment import (ConvergenceConstants, convergence_constants,
                         rho_diffusion_of_R, solve_J, solve_rho_D,
                         solve_rho_n, solve_rho_n_of_R)
from .errors import (BranchMisuse, ConfigError, DrawdownError,
                     DriftNonpositive, ExponentBeyondRadius, InvalidScale,
                     InvalidStudy, MaxIterations, NetProfitViolated,
                     ScaleTooSmall, SolverNoBracket, StateOutsideDomain,
                     TailConditionFailed, ThresholdBeyondSupport)
from .model import (Deterministic, DrawdownState, Exponential, MarketParams,
                    ScaledParams, SeverityModel, Uniform, excess_exp_moments,
                    excess_mean, hazard_tail_check, kappa, sample_severity,
                    scale, severity_moment, validate_market)
from .oracle import PicardGrid, picard_grid, picard_solve, picard_step
from .problem import DrawdownProblem
from .retention import (Cap, DiffusionOptimal, Full, MaxAdjust, Proportional,
                        RetentionFn, RetentionMoments, diffusion_optimal,
                        eval_RD, eval_Rn_rho, exp_moment, max_adjust,
                        net_profit_check, retention_moments, solve_Rc)
from .simulate import (DriftIdentityReport, McEstimate, SimConfig,
                       diffusion_estimate, drift_identity_check, mc_estimate,
                       simulate_outcomes, simulate_path)
from .study import (StudyResult, StudySpec, generator_certificates,
                    run_convergence_study, run_report)
from .valuefn import (BoundBundle, DrawdownSurface, apply_generator_n,
                      ell_n, lundberg_bound, psi_D, psibar_Dn, psibar_n, u_n)

__version__ = "0.1.0"
