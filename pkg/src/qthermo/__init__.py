"""Work extraction from bipartite quantum states under measurement feedback."""

__version__ = "0.1.0"

from .operators import Bipartite, bipartite, partial_trace, validate_density  # noqa: E402
from .thermo import (  # noqa: E402
    ThermalContext,
    beta_star,
    ergotropy,
    ergotropy_vs_isothermal,
    gibbs_state,
    isothermal_extractable_work,
    relative_entropy,
    von_neumann_entropy,
)
from .correlations import (  # noqa: E402
    SearchSettings,
    brute_force_J,
    maximize_classical_correlations,
    mutual_information,
    quantum_discord,
)
from .feedback import (  # noqa: E402
    FeedbackScenario,
    WorkLedger,
    discord_stroke_work,
    feedback_extractable_work,
    net_measurement_gain,
    total_feedback_budget,
)
from .isothermal import run_isothermal_extraction, run_joint_stroke  # noqa: E402
