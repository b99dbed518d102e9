"""Simulation and bound verification for Markov-up processes."""

__version__ = "0.1.0"

from .audit import (  # noqa: F401
    AssumptionProfile,
    KappaModel,
    audit,
    exp_moment,
    kappa_bar,
    kappa_closed_form_example,
    kappa_enumerate,
    rho_check,
)
from .bounds import BoundReport, alpha_max, m1, m2, m3, sweep, theorem_bound  # noqa: F401
from .process import (  # noqa: F401
    DescentLaw,
    EpochDecomposition,
    ExampleLaw,
    ExampleLawParams,
    FunctionLaw,
    GeometricTail,
    TabularLaw,
    Trajectory,
    TransitionLaw,
    epochs,
    law_example,
    law_tabular,
    memory_update,
    simulate,
    stat_chi,
    stat_xi,
    stat_zeta,
)
from .verification import (  # noqa: F401
    EstimateWithCI,
    MCBudget,
    dominance_report,
    exact_oracle,
    hitting_series,
    mc_exp_tau,
    mc_lemma1,
    mc_lemma2,
    mc_lemma3,
)
