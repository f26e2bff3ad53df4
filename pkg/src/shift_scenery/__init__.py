"""Scaling sceneries of shift-invariant measures.

Exact cylinder models (products, chains, compiled finite-range potentials,
mixtures), blow-up distributions along trajectories, the backward-conditional
machinery that identifies their limit, and seeded Monte Carlo certification
of the whole picture.
"""

from .errors import (
    ConfigError,
    DegenerateIndicatorError,
    InvalidModelError,
    PeriodicChainError,
    ShiftSceneryError,
    UnsupportedModelError,
    ZeroMeasurePrefixError,
)
from .words import Alphabet, shift_distance
from .models import (
    BernoulliModel,
    BlockGibbsModel,
    MarkovModel,
    MeasureModel,
    MixtureModel,
    compile_block_gibbs,
    cylinder_measure,
    log_cylinder_measure,
    model_from_dict,
    model_hash,
    model_to_dict,
    stationary_distribution,
    two_sided_cylinder_measure,
    validate_model,
)
from .sampling import Trajectory, sample_future, sample_past, sample_past_batch
from .scenery import (
    CylinderVector,
    EmpiricalDistribution,
    GeneratingSet,
    blowup_distribution,
    distribution_distance,
    evaluate_generating_set,
    minimeasure,
    scenery_distribution,
)
from .jacobian import (
    g_limit,
    g_n,
    g_word_limit,
    g_word_n,
    limit_mass_exact,
    limit_mass_montecarlo,
)
from .stats import (
    CltReport,
    EquivalenceReport,
    clt_ensemble,
    clt_statistic,
    gibbs_equivalence_audit,
    markov_asymptotic_variance,
    symbol_occupation_statistic,
)
from .battery import default_battery

__version__ = "0.1.0"
