"""Thermal-aware chiplet placement on a 2.5D interposer with an RBF surrogate."""

from .geometry import Chiplet, Placement, free_positions, is_legal, try_jump, try_move
from .netlist import Net, brute_force_route, hpwl, route_wirelength
from .thermal import ThermalConfig, max_temperature, solve_steady_state
from .initial_placement import run_stage_one
from .annealer import AnnealConfig, run_stage_two

__all__ = [
    "AnnealConfig", "Chiplet", "Net", "Placement", "ThermalConfig", "brute_force_route",
    "free_positions", "hpwl", "is_legal", "max_temperature", "route_wirelength",
    "run_stage_one", "run_stage_two", "solve_steady_state", "try_jump", "try_move",
]

__version__ = "0.1.0"
