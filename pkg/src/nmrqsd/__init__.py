"""Quantum state diffusion simulation of measurement on a liquid-NMR spin qubit."""

from .experiment import (
    ConfigError,
    RunReport,
    SimulationConfig,
    compare_oracle,
    reproduce_figures,
    run,
    simulate,
    sweep,
)
from .lindblad import MasterEquationProblem, OracleInstabilityError, integrate_master, lindblad_rhs
from .nmr import Frame, Gate, NmrParameters
from .qsd import (
    DegenerateTrajectoryError,
    ExpectationSource,
    NoiseConvention,
    NoiseSharing,
    QsdWeights,
    TrajectoryRecord,
    evolve_basis_trajectories,
    evolve_pure_ensemble,
    qsd_step,
)

__version__ = "0.1.0"
