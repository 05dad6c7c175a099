"""Within-host viral dynamics with antibody-dependent enhancement."""
from .equilibria import (
    DerivedThresholds,
    EquilibriumKind,
    EquilibriumPoint,
    ade_equilibrium,
    derived_thresholds,
    equilibrium_residual,
    immunosuppression_equilibrium,
    no_ade_equilibrium,
    trivial_equilibrium,
)
from .integrator import IntegrationError, IntegrationOptions, SummaryMetrics, Trajectory, integrate, summary_metrics
from .model import (
    COUNTEREXAMPLE,
    BASELINE,
    ModelParams,
    ModelVariant,
    State,
    ValidationReport,
    beta_effective,
    initial_state,
    rhs_basic,
    rhs_latent,
    validate_params,
)
from .stability import (
    Classification,
    QuarticPoly,
    StabilityReport,
    characteristic_quartic,
    classify_equilibrium,
    eigenvalues_quartic,
    gamma_closed_form_no_ade,
    jacobian_basic,
    routh_hurwitz_quartic,
)

__version__ = "0.1.0"
