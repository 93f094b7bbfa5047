"""IMC-based PID design and evaluation for a two-loop vapour-compression refrigeration plant."""

__version__ = "0.1.0"

from .imc import PidParams, imc_pid  # noqa: E402
from .lti import ContinuousTF, DiscreteTF, Polynomial, discretize, tf  # noqa: E402
from .metrics import JWeights, aggregate_j, iae, iavu, itae  # noqa: E402
from .pairing import MimoPlant2x2, recommend_pairing, rga, steady_state_matrix  # noqa: E402
from .pid import PidState, pid_reset, pid_step  # noqa: E402
from .reduction import SecondOrderModel, fit_sopm  # noqa: E402
from .scenario import Scenario, SimResult, default_scenario, run_closed_loop  # noqa: E402
from .sweep import SweepGrid, argmin_j, run_sweep  # noqa: E402

__all__ = [
    "ContinuousTF", "DiscreteTF", "JWeights", "MimoPlant2x2", "PidParams", "PidState",
    "Polynomial", "Scenario", "SecondOrderModel", "SimResult", "SweepGrid",
    "aggregate_j", "argmin_j", "default_scenario", "discretize", "fit_sopm", "iae",
    "iavu", "imc_pid", "itae", "pid_reset", "pid_step", "recommend_pairing", "rga",
    "run_closed_loop", "run_sweep", "steady_state_matrix", "tf",
]
