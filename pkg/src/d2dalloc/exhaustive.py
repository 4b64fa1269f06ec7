"""Brute-force ground truth: every (rho, x) that satisfies the constraints.

Meant for small instances only; the search space is counted up front and
compared against a budget before anything is enumerated.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .model import (
    Assignment,
    LinkKind,
    Scenario,
    SolveResult,
    SolveStats,
    better,
    make_result,
    rate,
    sinr,
)


class BudgetExceeded(RuntimeError):
    def __init__(self, estimate: int, budget: int):
        super().__init__(f"exhaustive search would enumerate {estimate} assignments (budget {budget})")
        self.estimate = estimate
        self.budget = budget


@dataclass(frozen=True)
class EnumOptions:
    restrict_one_d2d_per_channel: bool = False
    force_d2d_mode_only: bool = False
    budget: int = 10 ** 6

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError("budget must be > 0")


def link_options(scenario: Scenario, j: int, opts: EnumOptions) -> list[tuple[tuple[int, ...], bool]]:
    """Per-link choices as (channels, cellular mode); modes first, then channels in id order."""
    kind = scenario.link(j).kind
    if kind is LinkKind.UPLINK_CELLULAR:
        return [((i,), True) for i in scenario.uplink_channels]
    if kind is LinkKind.DOWNLINK_CELLULAR:
        return [((i,), True) for i in scenario.downlink_channels]
    out = [((), False)]
    out += [((i,), False) for i in scenario.channels]
    if not opts.force_d2d_mode_only:
        out += [((u, d), True) for u in scenario.uplink_channels for d in scenario.downlink_channels]
    return out


def search_space_size(scenario: Scenario, opts: EnumOptions = EnumOptions()) -> int:
    return math.prod(len(link_options(scenario, j, opts)) for j in range(1, scenario.n + 1))


def search_complexity(scenario: Scenario) -> int:
    """Operation count of the classical exhaustive-search estimate (constants dropped)."""
    s = scenario
    total = 0
    for x in range(min(s.m_u - s.n_uc, s.m_d - s.n_dc) + 1):
        if x > s.n_d:
            break
        total += (math.comb(s.n_d, x)
                  * math.perm(s.m_u, s.n_uc + x)
                  * math.perm(s.m_d, s.n_dc + x)
                  * s.n_d * (s.m + 1) ** (s.n_d - x))
    return total


def _evaluate(scenario: Scenario, choice: dict):
    """Objective of a structurally valid choice, or None at the first missed SINR floor."""
    lc, ld = {}, {}
    for j, (chans, mode) in choice.items():
        for i in chans:
            (lc if mode else ld).setdefault(i, []).append(j)
    total = 0.0
    for j in sorted(choice):
        chans, mode = choice[j]
        if not chans:
            continue
        values = [sinr(scenario, i, lc.get(i, ()), ld.get(i, ()), j, mode) for i in chans]
        value = min(values)
        link = scenario.link(j)
        if value < link.sinr_min:
            return None
        total += link.weight * rate(value)
    return total


def exhaustive_solve(scenario: Scenario, opts: EnumOptions = EnumOptions(), **kwargs) -> SolveResult:
    if kwargs:
        opts = EnumOptions(**{**opts.__dict__, **kwargs})
    estimate = search_space_size(scenario, opts)
    if estimate > opts.budget:
        raise BudgetExceeded(estimate, opts.budget)

    start = time.perf_counter()
    n = scenario.n
    options = [link_options(scenario, j, opts) for j in range(1, n + 1)]
    cs_used = set()
    d2d_count = {}
    choice = {}
    best = [None, None, None]  # value, key, assignment
    visited = [0]

    def leaf():
        visited[0] += 1
        value = _evaluate(scenario, choice)
        if value is None:
            return
        assignment = Assignment(
            frozenset((i, j) for j, (chans, _) in choice.items() for i in chans),
            frozenset(j for j, (chans, mode) in choice.items()
                      if mode and chans and scenario.link(j).kind is LinkKind.D2D),
        )
        key = assignment.sort_key()
        if better(value, key, best[0], best[1]):
            best[:] = [value, key, assignment]

    def walk(idx: int):
        if idx == n:
            leaf()
            return
        j = idx + 1
        is_d2d = scenario.link(j).kind is LinkKind.D2D
        for chans, mode in options[idx]:
            # 6c: one x=1 occupant per channel
            if mode and any(i in cs_used for i in chans):
                continue
            if is_d2d and opts.restrict_one_d2d_per_channel and any(d2d_count.get(i, 0) for i in chans):
                continue
            choice[j] = (chans, mode)
            if mode:
                cs_used.update(chans)
            if is_d2d:
                for i in chans:
                    d2d_count[i] = d2d_count.get(i, 0) + 1
            walk(idx + 1)
            if mode:
                cs_used.difference_update(chans)
            if is_d2d:
                for i in chans:
                    d2d_count[i] -= 1
            del choice[j]

    walk(0)
    stats = SolveStats(states_visited=visited[0], decisions_enumerated=visited[0])
    stats.wall_time = time.perf_counter() - start
    stats.extra["search_space"] = estimate
    tag = "exhaustive" + ("+ca-only" if opts.force_d2d_mode_only else "") + (
        "+restricted" if opts.restrict_one_d2d_per_channel else "")
    return make_result(scenario, best[2], stats, tag)
