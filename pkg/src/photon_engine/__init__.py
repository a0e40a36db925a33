"""Atom-doped optical cavity heat engines: Jaynes-Cummings dynamics with
thermal baths, radiation-pressure and Alicki work, Otto and Carnot cycles."""
from .cycles import CycleConfig, CycleRecord, carnot_geometry, dephase, run_cycle, run_to_steady_cycle
from .dynamics import BathCoupling, IntegratorConfig, evolve_stroke, lindblad_rhs
from .errors import ConfigError, ConvergenceError, EngineError, TraceDriftError, TruncationError
from .jc_model import ModelParams, PistonProtocol, dressed_basis, hamiltonian, pressure_operator
from .quantum_ops import HilbertSpec
from .sectors import SectorState
from .sweeps import SweepSpec, carnot_bound, efficiency, power, run_sweep
from .thermo import thermal_product_state

__version__ = "0.1.0"

__all__ = [
    "BathCoupling", "ConfigError", "ConvergenceError", "CycleConfig", "CycleRecord", "EngineError",
    "HilbertSpec", "IntegratorConfig", "ModelParams", "PistonProtocol", "SectorState", "SweepSpec",
    "TraceDriftError", "TruncationError", "carnot_bound", "carnot_geometry", "dephase", "dressed_basis",
    "efficiency", "evolve_stroke", "hamiltonian", "lindblad_rhs", "power", "pressure_operator",
    "run_cycle", "run_sweep", "run_to_steady_cycle", "thermal_product_state",
]
