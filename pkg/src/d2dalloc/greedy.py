"""Bipartite-graph seeded greedy: KM matching for cellular links, then D2D admission.

Cellular links are placed by a maximum-weight matching on their
interference-free rates. D2D links are then admitted one at a time, each
iteration taking the candidate (uplink channel, downlink channel, link,
mode) whose priority value (net gain in weighted sum-rate, scaled down for
cellular mode while spare channel pairs are plentiful) is largest and
positive.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .model import (
    INFEASIBLE,
    Assignment,
    LinkKind,
    Scenario,
    SolveResult,
    SolveStats,
    better,
    make_result,
    rate,
    sinr,
    tx_power,
    tx_rx_nodes,
)


class Unmatchable(Exception):
    """Some cellular link has no finite edge in any complete matching."""


def cellular_edge_weight(scenario: Scenario, i: int, j: int):
    link = scenario.link(j)
    if not link.is_cellular:
        raise ValueError(f"link {j} is not cellular")
    uplink_link = link.kind is LinkKind.UPLINK_CELLULAR
    if scenario.is_uplink(i) != uplink_link:
        return INFEASIBLE
    tx, rx = tx_rx_nodes(link, True, i, scenario)
    snr = tx_power(link, True, i, scenario) * scenario.gain(i, tx, rx) / scenario.noise_w
    if snr < link.sinr_min:
        return INFEASIBLE
    return link.weight * rate(snr)


def edge_weight_table(scenario: Scenario) -> list[list]:
    """t[i-1][j-1] over all channels and cellular links."""
    return [[cellular_edge_weight(scenario, i, j) for j in scenario.cellular_ids] for i in scenario.channels]


def _hungarian_min(cost: np.ndarray) -> list[int]:
    """Min-cost assignment of every row to a distinct column (rows <= cols).

    Shortest augmenting path with potentials, O(rows^2 * cols).
    """
    n, m = cost.shape
    inf = math.inf
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    owner = [0] * (m + 1)  # column -> row (1-based), 0 = free
    way = [0] * (m + 1)
    for row in range(1, n + 1):
        owner[0] = row
        col0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[col0] = True
            r0 = owner[col0]
            delta, col1 = inf, 0
            for col in range(1, m + 1):
                if used[col]:
                    continue
                cur = cost[r0 - 1, col - 1] - u[r0] - v[col]
                if cur < minv[col]:
                    minv[col], way[col] = cur, col0
                if minv[col] < delta:
                    delta, col1 = minv[col], col
            for col in range(m + 1):
                if used[col]:
                    u[owner[col]] += delta
                    v[col] -= delta
                else:
                    minv[col] -= delta
            col0 = col1
            if owner[col0] == 0:
                break
        while col0:
            col1 = way[col0]
            owner[col0] = owner[col1]
            col0 = col1
    assign = [0] * n
    for col in range(1, m + 1):
        if owner[col]:
            assign[owner[col] - 1] = col - 1
    return assign


def _max_matching(weights: list[list], fixed: dict) -> Optional[tuple[float, list[int]]]:
    """Best complete matching of links (columns) to channels (rows) honoring ``fixed``.

    Returns (total, channel index per link) or None if no finite completion.
    """
    n_ch = len(weights)
    n_links = len(weights[0]) if n_ch else 0
    finite = [w for row in weights for w in row if w is not INFEASIBLE]
    big = 2.0 * (n_links + 1) * (max((abs(w) for w in finite), default=0.0) + 1.0) + 1.0
    cost = np.empty((n_links, n_ch))
    for j in range(n_links):
        for i in range(n_ch):
            w = weights[i][j]
            allowed = fixed.get(j, i) == i and (i not in fixed.values() or fixed.get(j) == i)
            cost[j, i] = big if w is INFEASIBLE or not allowed else -w
    assign = _hungarian_min(cost)
    if any(cost[j, i] >= big for j, i in enumerate(assign)):
        return None
    return math.fsum(weights[i][j] for j, i in enumerate(assign)), assign


def km_match(weights) -> tuple[frozenset, float]:
    """Maximum-weight matching covering every link (column) with finite edges.

    ``weights[i][j]`` is the gain of link ``j`` on channel ``i`` (0-based
    here), or INFEASIBLE. Among optimal matchings the one whose per-link
    channel vector is lexicographically smallest wins. Raises Unmatchable.
    """
    weights = [list(row) for row in weights]
    n_ch = len(weights)
    n_links = len(weights[0]) if n_ch else 0
    if n_links > n_ch:
        raise ValueError("need at least as many channels as links")
    if n_links == 0:
        return frozenset(), 0.0
    best = _max_matching(weights, {})
    if best is None:
        raise Unmatchable("some cellular link cannot be matched through a finite edge")
    total = best[0]
    fixed = {}
    for j in range(n_links):
        for i in range(n_ch):
            if i in fixed.values() or weights[i][j] is INFEASIBLE:
                continue
            trial = _max_matching(weights, {**fixed, j: i})
            if trial is not None and trial[0] >= total - 1e-9:
                fixed[j] = i
                break
    pairs = frozenset((i, j) for j, i in fixed.items())
    return pairs, math.fsum(weights[i][j] for i, j in pairs)


def channel_value(scenario: Scenario, i: int, lc, ld, partial: Optional[Assignment] = None) -> float:
    """Weighted sum-rate of every occupant of channel ``i``.

    A cellular-mode D2D occupant is rated on its weaker hop; its other hop
    is looked up in ``partial``.
    """
    lc, ld = sorted(lc), sorted(ld)
    total = 0.0
    for j in lc:
        link = scenario.link(j)
        s = sinr(scenario, i, lc, ld, j, True)
        if link.kind is LinkKind.D2D:
            s = min(s, _other_hop_sinr(scenario, partial, i, j))
        total += link.weight * rate(s)
    for j in ld:
        total += scenario.link(j).weight * rate(sinr(scenario, i, lc, ld, j, False))
    return total


def _other_hop_sinr(scenario: Scenario, partial: Optional[Assignment], i: int, j: int) -> float:
    if partial is None:
        raise ValueError(f"cellular-mode link {j} on channel {i} needs the partial assignment")
    others = [c for c in partial.channels_of(j) if c != i]
    if len(others) != 1:
        raise ValueError(f"cellular-mode link {j} has no paired channel")
    (other,) = others
    lc, ld = [], []
    for z in partial.occupants(other):
        (lc if partial.x(scenario, z) else ld).append(z)
    return sinr(scenario, other, lc, ld, j, True)


class Candidate(NamedTuple):
    i_u: int
    i_d: int
    j: int
    t: int

    def sort_key(self) -> tuple:
        return (self.t, self.j, self.i_u, self.i_d)


@dataclass
class _Partial:
    """Mutable working copy of the assignment built by the greedy loop."""

    scenario: Scenario
    lc: dict = field(default_factory=dict)
    ld: dict = field(default_factory=dict)
    cell_mode: set = field(default_factory=set)
    hops: dict = field(default_factory=dict)

    def freeze(self) -> Assignment:
        rho = set()
        for i, occ in self.lc.items():
            rho.update((i, j) for j in occ)
        for i, occ in self.ld.items():
            rho.update((i, j) for j in occ)
        return Assignment(frozenset(rho), frozenset(self.cell_mode))

    def occupants(self, i: int) -> tuple[list, list]:
        return sorted(self.lc.get(i, ())), sorted(self.ld.get(i, ()))

    def _hop(self, j: int, skip: int) -> float:
        (other,) = [c for c in self.hops[j] if c != skip]
        lc, ld = self.occupants(other)
        return sinr(self.scenario, other, lc, ld, j, True)

    def value(self, i: int, lc, ld, other_hop: Optional[float] = None):
        """Channel value with occupants (lc, ld), or INFEASIBLE if any floor is missed.

        ``other_hop`` is the SINR of a cellular-mode occupant's paired hop when
        that occupant is not yet recorded in the partial assignment.
        """
        total = 0.0
        for j in lc:
            link = self.scenario.link(j)
            s = sinr(self.scenario, i, lc, ld, j, True)
            if link.kind is LinkKind.D2D:
                s = min(s, other_hop if other_hop is not None else self._hop(j, i))
            if s < link.sinr_min:
                return INFEASIBLE
            total += link.weight * rate(s)
        for j in ld:
            link = self.scenario.link(j)
            s = sinr(self.scenario, i, lc, ld, j, False)
            if s < link.sinr_min:
                return INFEASIBLE
            total += link.weight * rate(s)
        return total


@dataclass(frozen=True)
class GreedyOptions:
    restrict_one_d2d_per_channel: bool = False
    force_d2d_mode_only: bool = False
    incremental: bool = True


def _d2d_on(part: _Partial, i: int) -> int:
    lc, ld = part.occupants(i)
    return len(ld) + sum(1 for j in lc if part.scenario.link(j).kind is LinkKind.D2D)


def _scale(scenario: Scenario, n_unassigned: int):
    spare = min(scenario.m_u - scenario.n_uc, scenario.m_d - scenario.n_dc)
    if spare <= 0:
        return None
    return min(1.0, n_unassigned / spare)


def _t0_gain(part: _Partial, i: int, j: int, opts: GreedyOptions):
    if opts.restrict_one_d2d_per_channel and _d2d_on(part, i):
        return INFEASIBLE
    lc, ld = part.occupants(i)
    after = part.value(i, lc, sorted(ld + [j]))
    if after is INFEASIBLE:
        return INFEASIBLE
    return after - part.value(i, lc, ld)


def _t1_gain(part: _Partial, i_u: int, i_d: int, j: int, opts: GreedyOptions):
    """Net change in weighted sum-rate over both channels, counting ``j`` once at its weaker hop."""
    s = part.scenario
    if part.lc.get(i_u) or part.lc.get(i_d):
        return INFEASIBLE
    if opts.restrict_one_d2d_per_channel and (_d2d_on(part, i_u) or _d2d_on(part, i_d)):
        return INFEASIBLE
    link = s.link(j)
    ld_u = sorted(part.ld.get(i_u, ()))
    ld_d = sorted(part.ld.get(i_d, ()))
    up = sinr(s, i_u, [j], ld_u, j, True)
    down = sinr(s, i_d, [j], ld_d, j, True)
    new_u = part.value(i_u, [j], ld_u, other_hop=down)
    new_d = part.value(i_d, [j], ld_d, other_hop=up)
    if new_u is INFEASIBLE or new_d is INFEASIBLE:
        return INFEASIBLE
    old_u = part.value(i_u, [], ld_u)
    old_d = part.value(i_d, [], ld_d)
    return new_u + new_d - link.weight * rate(min(up, down)) - old_u - old_d


def priority_value(scenario: Scenario, partial: Assignment, cand: Candidate,
                   opts: GreedyOptions = GreedyOptions()):
    """Priority of admitting D2D link ``cand.j`` (unassigned in ``partial``) as described by ``cand``."""
    part = _from_assignment(scenario, partial)
    unassigned = [j for j in scenario.d2d_ids if not partial.channels_of(j)]
    if cand.j not in unassigned:
        raise ValueError(f"link {cand.j} is already assigned")
    return _priority(part, cand, len(unassigned), opts)


def _base_priority(part: _Partial, cand: Candidate, opts: GreedyOptions):
    """Priority before the cellular-mode scale factor is applied."""
    s = part.scenario
    if cand.t == 0:
        if (cand.i_u == 0) == (cand.i_d == 0):
            return INFEASIBLE
        if cand.i_u and not s.is_uplink(cand.i_u) or cand.i_d and s.is_uplink(cand.i_d):
            return INFEASIBLE
        return _t0_gain(part, cand.i_u or cand.i_d, cand.j, opts)
    if opts.force_d2d_mode_only or _scale(s, 1) is None:
        return INFEASIBLE
    if not (cand.i_u and cand.i_d and s.is_uplink(cand.i_u) and not s.is_uplink(cand.i_d)):
        return INFEASIBLE
    return _t1_gain(part, cand.i_u, cand.i_d, cand.j, opts)


def _scaled(scenario: Scenario, cand: Candidate, base, n_unassigned: int):
    if base is INFEASIBLE or cand.t == 0:
        return base
    return _scale(scenario, n_unassigned) * base


def _priority(part: _Partial, cand: Candidate, n_unassigned: int, opts: GreedyOptions):
    return _scaled(part.scenario, cand, _base_priority(part, cand, opts), n_unassigned)


def _from_assignment(scenario: Scenario, assignment: Assignment) -> _Partial:
    part = _Partial(scenario)
    for i, j in assignment.rho:
        target = part.lc if assignment.x(scenario, j) else part.ld
        target.setdefault(i, set()).add(j)
    part.cell_mode = set(assignment.cell_mode)
    part.hops = {j: assignment.channels_of(j) for j in assignment.cell_mode}
    return part


def _candidates(scenario: Scenario, unassigned) -> list[Candidate]:
    out = []
    for j in unassigned:
        out += [Candidate(i, 0, j, 0) for i in scenario.uplink_channels]
        out += [Candidate(0, i, j, 0) for i in scenario.downlink_channels]
        out += [Candidate(u, d, j, 1) for u in scenario.uplink_channels for d in scenario.downlink_channels]
    return out


def greedy_solve(scenario: Scenario, opts: GreedyOptions = GreedyOptions(), **kwargs) -> SolveResult:
    if kwargs:
        opts = GreedyOptions(**{**opts.__dict__, **kwargs})
    start = time.perf_counter()
    tag = "greedy" + ("+ca-only" if opts.force_d2d_mode_only else "") + (
        "+restricted" if opts.restrict_one_d2d_per_channel else "")
    stats = SolveStats()
    try:
        pairs, km_total = km_match(edge_weight_table(scenario))
    except Unmatchable:
        stats.wall_time = time.perf_counter() - start
        return make_result(scenario, None, stats, tag)
    stats.extra["km_total"] = km_total

    part = _Partial(scenario)
    for i, col in pairs:
        part.lc.setdefault(i + 1, set()).add(col + 1)

    unassigned = list(scenario.d2d_ids)
    # base (unscaled) priorities; the cellular-mode scale depends on |U| and is applied at selection
    cache = {cand: _base_priority(part, cand, opts) for cand in _candidates(scenario, unassigned)}
    iterations = 0
    while unassigned:
        best, best_cand = INFEASIBLE, None
        for cand, base in cache.items():
            value = _scaled(scenario, cand, base, len(unassigned))
            if value is INFEASIBLE or value <= 0:
                continue
            if best_cand is None or better(value, cand.sort_key(), best, best_cand.sort_key()):
                best, best_cand = value, cand
        stats.decisions_enumerated += len(cache)
        if best_cand is None:
            break
        iterations += 1
        j = best_cand.j
        if best_cand.t == 0:
            touched = {best_cand.i_u or best_cand.i_d}
            part.ld.setdefault(next(iter(touched)), set()).add(j)
        else:
            touched = {best_cand.i_u, best_cand.i_d}
            part.lc.setdefault(best_cand.i_u, set()).add(j)
            part.lc.setdefault(best_cand.i_d, set()).add(j)
            part.cell_mode.add(j)
            part.hops[j] = [best_cand.i_u, best_cand.i_d]
        unassigned.remove(j)
        # a cellular-mode occupant couples its two channels
        affected = set(touched)
        for i in touched:
            for z in part.lc.get(i, ()):
                if z in part.hops:
                    affected.update(part.hops[z])
        for cand in list(cache):
            if cand.j == j:
                del cache[cand]
            elif not opts.incremental or cand.i_u in affected or cand.i_d in affected:
                cache[cand] = _base_priority(part, cand, opts)

    stats.states_visited = iterations
    stats.wall_time = time.perf_counter() - start
    return make_result(scenario, part.freeze(), stats, tag)

