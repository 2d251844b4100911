"""Parameter estimation for binary Markov random fields: exact ML, pseudo-likelihood and LAP."""
from .errors import (DimensionError, EmptyDatasetError, InvalidCliqueError, InvalidDimensionError,
                     MRFError, NumericalError, PositivityError, SubproblemError, TooLargeError,
                     WidthExceededError)
from .estimation import (EstimationResult, SufficientStats, fit_ml, fit_pl, ml_objective_grad,
                         pl_objective_grad, sufficient_stats)
from .graph import (CliqueSystem, Graph, build_model, chain, chimera, grid2d, grid3d,
                    marginal_graph, one_neighborhood, rbm)
from .harness import ExperimentConfig, aggregate, relative_error, run_experiment
from .inference import (InferenceResult, JointTable, brute_force, explicit_ml_estimate,
                        joint_table, marginalize, mobius_potentials, variable_elimination)
from .lap import AuxiliarySpec, build_auxiliary, fit_lap
from .model import LogLinearModel, energy, random_model
from .optimize import OptimizerConfig, maximize
from .sampling import Dataset, SamplerConfig, full_conditional, gibbs_sample

__version__ = "0.1.0"
