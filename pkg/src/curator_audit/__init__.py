"""Blackbox DP auditors, the mechanisms they audit, and false-positive region analysis."""

from .auditors import (AUDITORS, DEFAULT_SURROGATE, AuditRecord, SurrogateFn, deltasiege_audit, dpsgd_audit,
                       dpsniper_audit, mpl_audit, run_auditor)
from .estimators import PowerEstimate, bayesian_interval, binomial_lower_bound, binomial_upper_bound, kde_fit
from .fp_analyzer import (AttackManifest, AttackUnavailable, AuditVerdict, EmptyRegion, ParamRegion,
                          UnsupportedCombination, Verdict, adapted_laplace_mpl_params, adapted_laplace_sniper_params,
                          adapted_svt_mpl_params, adapted_svt_sniper_params, classify, construct_attack,
                          dpsgd_fp_region, gaussian_deltasiege_regions, laplace_sniper_region, rappor_sniper_region,
                          svt_sniper_region)
from .ground_truth import EpsilonStar, PrivacyClaim, canonical_pair, optimal_witness, tradeoff_curve, true_epsilon
from .mechanisms import (PATTERNS, AdjacentPair, DensityOracle, Family, MechanismSpec, Sampler, blackbox,
                         generate_inputs, oracle, sample, sample_batch)
from .witness import WitnessSet

__version__ = "0.1.0"
