"""Scale analysis and simulation of diffusion-like perturbations near
one-dimensional bifurcation points."""

__version__ = "0.1.0"

from .analysis import (BranchData, CharacteristicPair, DDCurve, LimitRange,
                       LimitClassification, SSResult, SSStatus,
                       check_strong_stochasticity, classify_branch,
                       classify_isotropic, classify_parametrized, dd_curve,
                       dd_ratio, equilibrium_branch)
from .asymptotics import (Comparison, EpsPower, Ordering, Region,
                          classify_region, compare, dominant_terms,
                          reduce_to_envelope, scale_functions)
from .bifurcation import (BifurcationKind, ScaleProfile, canonical_noise,
                          detect_bifurcation, scale_profile)
from .polynomial import UniPoly
from .poset import (PowerSet, active_set, contains_in_S, envelope,
                    minimal_elements, pivot_structure, support_value)
from .simulate import (DDMCModel, Jump, SamplePath, SDEModel,
                       characteristics_from_rates, em_ensemble, em_integrate,
                       rescale, ssa_ensemble, ssa_simulate)
from .validate import (ComparisonReport, Ensemble, EnsembleMeta,
                       PipelineConfig, Thresholds, convergence_trend,
                       ks_critical, marginal_ks, moment_compare, run_pipeline)
