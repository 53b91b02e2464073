"""Kernel stochastic configuration networks for nonlinear regression.

Incremental random-basis construction under a supervisory admissibility test,
combined with Gaussian kernel ridge regression over the concatenated
[hidden outputs, inputs] representation. Ships the plain SCN, RVFL, KRVFL and
RBFN baselines, a multi-trial benchmark harness with spectrum and robustness
diagnostics, and a reproducible CLI.
"""

from .basis import (DegenerateCandidate, HiddenNode, NoAdmissibleNode,
                    ScnModel, SupervisoryConfig, TrainTrace, configure_next_node,
                    draw_candidates, eval_node, eval_nodes, train_scn, xi_score)
from .baselines import (BadCenterCount, KrvflModel, RbfnModel, RvflModel,
                        train_krvfl, train_rbfn, train_rvfl)
from .data import (BadCounts, Dataset, NonNumericCell, ParseError, Split,
                   TooFewRows, augment_debutanizer, augment_powerload,
                   gen_numerical, load_csv, noisy_validation,
                   normalize_fit_apply, save_csv, split_sequential,
                   split_shuffled)
from .evaluation import (Experiment, Metrics, ModelSpec, SpectrumReport,
                         TrialReport, compute_metrics, kernel_sweep,
                         patience_study, run_trials, spectrum,
                         spectrum_comparison)
from .kernel import (GramState, KernelConfig, KernelSolution, WidthMismatch,
                     cross_gram, gram_build, gram_extend, kernel_predict,
                     kernel_ridge_fit)
from .linalg import (NoConvergence, NotPositiveDefinite, cholesky_solve,
                     least_squares, sym_eigvals)
from .model import (DimensionMismatch, EmptyValidation, IoError, KscnModel,
                    SchemaError, load_model, predict, save_model, train_kscn)

__version__ = "0.1.0"
