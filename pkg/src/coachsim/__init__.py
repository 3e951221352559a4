"""Repair-cost models and simulation for erasure-coded caching in cellular cells."""

__version__ = "0.1.0"

from .code_model import (
    ArrayCodeSpec,
    CodeError,
    ParityCheckMatrix,
    RecoveryEquation,
    build_array_ldpc,
    example_matrix_8_4,
    load_alist,
    recovery_equations,
    save_alist,
    syndrome,
    systematic_encode,
)
from .cost_models import (
    Cost,
    CostParams,
    LDPCScenario,
    MBRScenario,
    MSRHRScenario,
    MSRLRScenario,
    RSScenario,
    ScenarioError,
    c_ldpc_ub,
    c_mbr,
    c_msr_hr,
    c_msr_lr,
    c_rs,
    expected_cost,
)
from .greepair import RepairError, RepairOutcome, RepairTask, phase1, phase2, repair_node
from .opt_search import SearchCapExceeded, enumerate_plans, opt1, opt2, replay
from .churn_sim import SimConfig, place_symbols, run_experiment, run_opt_compare, simulate
from .presets import PRESETS, ConfigError, ExperimentPreset, load_config, parse_config, dump_config
