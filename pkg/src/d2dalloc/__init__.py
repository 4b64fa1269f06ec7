"""Joint mode selection and channel assignment for D2D links underlaying a cellular cell."""
from .dp import Decision, DpOptions, dp_solve, dp_state_count_check, enumerate_decisions, share_utility, stage0_solve
from .exhaustive import BudgetExceeded, EnumOptions, exhaustive_solve
from .greedy import Candidate, GreedyOptions, Unmatchable, channel_value, greedy_solve, km_match, priority_value
from .model import (
    INFEASIBLE,
    Assignment,
    CoChannelSets,
    Link,
    LinkKind,
    Scenario,
    SolveResult,
    check_feasible,
    co_channel_sets,
    link_rate,
    objective,
    sinr,
    tx_power,
    tx_rx_nodes,
)
from .scenario import GenConfig, RandomStream, generate

__version__ = "0.1.0"
