"""DeGroot opinion dynamics with conformist and rebel agents.

Rebels adopt one minus the weighted average of their neighbours' opinions.
The package predicts when the population is driven to the all-0.5 state
from spectral and structural properties of the learning topology, and checks
those predictions by simulation.
"""

from .dynamics import (
    Confidence,
    OpinionState,
    Outcome,
    Trajectory,
    fixed_point_direct,
    replay_check,
    run,
    step,
)
from .spectral import (
    Prediction,
    SpectralReport,
    Verdict,
    eigenvalues,
    has_minus_one_eigenvalue,
    iteration_matrix,
    predict,
    predicted_rate,
    signed_update_matrix,
    spectral_report,
)
from .topology import (
    AgentTypes,
    StructureReport,
    Topology,
    closed_groups,
    cyclic_partition,
    enumerate_cycles,
    generate_random,
    load_topology,
    period,
    rebel_bipartite,
    save_topology,
    strongly_connected,
    validate,
)

__version__ = "0.1.0"
