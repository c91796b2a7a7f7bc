"""Rigid-spacecraft attitude simulation with MRPs under delayed state feedback."""
from mrpsim.attitude import (
    PrincipalRotation,
    UnitQuaternion,
    bmat,
    mrp_from_principal,
    mrp_rate,
    mrp_to_quaternion,
    principal_from_mrp,
    quaternion_to_mrp,
    shadow_map,
    skew,
)
from mrpsim.controller import GainMatrix, compose_gain, control_torque, paper_gain
from mrpsim.dde import HistoryBuffer, IntegratorConfig, TrajectoryRecord, rk4_step, simulate
from mrpsim.dynamics import (
    InertiaModel,
    euler_rate,
    nonlinear_residual,
    pack_state,
    state_derivative,
    unpack_state,
)
from mrpsim.scenario import (
    Scenario,
    bundled_scenario,
    bundled_scenarios,
    parse_scenario,
    run_batch,
    summarize_run,
    write_trajectory_csv,
)
from mrpsim.switching import SwitchMachine, SwitchStrategy, Variant, chattering_metrics

__version__ = "0.1.0"
