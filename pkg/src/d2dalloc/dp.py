"""Optimal joint mode selection and channel assignment by dynamic programming.

Stage ``k`` has uplink channels ``1..k`` still to arrange; a state is the
pair (remaining link set J, remaining downlink channel set Z), both held as
bitmasks. At stage ``k`` the decision picks the x=1 occupant of uplink
channel ``k`` (at most one), its D2D-mode co-channel links, and, when the
x=1 occupant is a cellular-mode D2D link, a downlink channel ``d`` from Z
together with that channel's D2D-mode links. Stage 0 is the
channel-assignment-only problem over the downlink channels left in Z.

SINR feasibility of a co-channel set is downward closed (dropping an
occupant only lowers interference for the others), so the feasible D2D
sets per (channel, x=1 occupant) are enumerated once by depth-first
extension and reused by every state.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import NamedTuple, Optional

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
)

DEFAULT_STATE_BUDGET = 2 ** 26


class StateBudgetExceeded(RuntimeError):
    pass


class Decision(NamedTuple):
    x_cs: tuple = ()
    x_dsu: tuple = ()
    d: Optional[int] = None
    x_dsd: tuple = ()

    def sort_key(self) -> tuple:
        return (self.x_cs, self.x_dsu, -1 if self.d is None else self.d, self.x_dsd)

    @property
    def x_all(self) -> tuple:
        return tuple(sorted(self.x_cs + self.x_dsu + self.x_dsd))


@dataclass(frozen=True)
class DpOptions:
    force_d2d_mode_only: bool = False
    restrict_one_d2d_per_channel: bool = False
    per_hop_qos: bool = False
    state_budget: int = DEFAULT_STATE_BUDGET


def _bits(ids) -> int:
    mask = 0
    for j in ids:
        mask |= 1 << (j - 1)
    return mask


def _side(scenario: Scenario, channel: int, cs: tuple, members: tuple):
    """Evaluate one channel holding x=1 occupant ``cs`` and D2D-mode ``members``.

    Returns (weighted rate of the D2D-mode members plus a cellular occupant,
    SINR of a cellular-mode D2D occupant or None), or INFEASIBLE when any
    occupant on this channel misses its floor. The cellular-mode D2D rate is
    left to the caller because it needs the other hop.
    """
    value = 0.0
    cs_sinr = None
    for j in cs:
        link = scenario.link(j)
        s = sinr(scenario, channel, cs, members, j, True)
        if s < link.sinr_min:
            return INFEASIBLE
        if link.kind is LinkKind.D2D:
            cs_sinr = s
        else:
            value += link.weight * rate(s)
    for j in members:
        link = scenario.link(j)
        s = sinr(scenario, channel, cs, members, j, False)
        if s < link.sinr_min:
            return INFEASIBLE
        value += link.weight * rate(s)
    return value, cs_sinr


def share_utility(scenario: Scenario, k: int, dec: Decision, per_hop_qos: bool = False):
    """Weighted sum-rate of every link the decision places on channels ``k`` and ``d``.

    A cellular-mode D2D link counts once, at the rate of its weaker hop, and
    its floor applies to that weaker hop. ``per_hop_qos`` checks each hop
    against the floor instead; for a single floor the two readings accept
    exactly the same decisions.
    """
    up = _side(scenario, k, dec.x_cs, dec.x_dsu)
    if up is INFEASIBLE:
        return INFEASIBLE
    total, up_sinr = up
    if dec.d is None:
        return total
    down = _side(scenario, dec.d, dec.x_cs, dec.x_dsd)
    if down is INFEASIBLE:
        return INFEASIBLE
    total += down[0]
    (j,) = dec.x_cs
    link = scenario.link(j)
    worst = min(up_sinr, down[1])
    if not per_hop_qos and worst < link.sinr_min:
        return INFEASIBLE
    return total + link.weight * rate(worst)


class _Tables:
    """Feasible D2D-mode sets per (channel, x=1 occupant), keyed by bitmask."""

    def __init__(self, scenario: Scenario, opts: DpOptions):
        self.scenario = scenario
        self.opts = opts
        self._side = {}
        self._pair = {}

    def side(self, channel: int, cs: int) -> dict:
        """mask -> (value, cs_sinr, members) for every feasible D2D-mode set."""
        key = (channel, cs)
        if key not in self._side:
            self._side[key] = self._build_side(channel, cs)
        return self._side[key]

    def _build_side(self, channel: int, cs: int) -> dict:
        scenario = self.scenario
        cs_t = (cs,) if cs else ()
        out = {}
        base = _side(scenario, channel, cs_t, ())
        if base is INFEASIBLE:
            return out
        out[0] = (base[0], base[1], ())
        if self.opts.restrict_one_d2d_per_channel and cs and scenario.link(cs).kind is LinkKind.D2D:
            return out
        max_size = 1 if self.opts.restrict_one_d2d_per_channel else scenario.n_d
        candidates = [j for j in scenario.d2d_ids if j != cs]

        def extend(members: tuple, start: int):
            if len(members) >= max_size:
                return
            for idx in range(start, len(candidates)):
                grown = members + (candidates[idx],)
                res = _side(scenario, channel, cs_t, grown)
                if res is INFEASIBLE:
                    continue
                out[_bits(grown)] = (res[0], res[1], grown)
                extend(grown, idx + 1)

        extend((), 0)
        return out

    def pair(self, k: int, j: int, d: int) -> dict:
        """Cellular-mode D2D ``j`` on (k, d): union mask -> (utility, up members, down members).

        Each union keeps its best split, ties going to the lexicographically
        smaller (uplink members, downlink members).
        """
        key = (k, j, d)
        if key in self._pair:
            return self._pair[key]
        link = self.scenario.link(j)
        out = {}
        down = self.side(d, j)
        for a_mask, (a_val, a_sinr, a_mem) in self.side(k, j).items():
            for b_mask, (b_val, b_sinr, b_mem) in down.items():
                if a_mask & b_mask:
                    continue
                worst = min(a_sinr, b_sinr)
                if not self.opts.per_hop_qos and worst < link.sinr_min:
                    continue
                u = a_val + b_val + link.weight * rate(worst)
                union = a_mask | b_mask
                prev = out.get(union)
                if prev is None or better(u, (a_mem, b_mem), prev[0], (prev[1], prev[2])):
                    out[union] = (u, a_mem, b_mem)
        self._pair[key] = out
        return out


class _Solver:
    def __init__(self, scenario: Scenario, opts: DpOptions):
        self.s = scenario
        self.opts = opts
        self.tables = _Tables(scenario, opts)
        self.memo = {}
        self.decisions = 0
        self.ulc_mask = _bits(scenario.ulc_ids)
        self.dlc_mask = _bits(scenario.dlc_ids)
        self.d2d_mask = _bits(scenario.d2d_ids)
        self.down_channels = list(scenario.downlink_channels)

    def _z_bit(self, channel: int) -> int:
        return 1 << (channel - self.s.m_u - 1)

    def _z_ids(self, z: int) -> list:
        return [c for c in self.down_channels if z & self._z_bit(c)]

    def _store(self, key, entry):
        if len(self.memo) >= self.opts.state_budget:
            raise StateBudgetExceeded(
                f"DP memo exceeded {self.opts.state_budget} states")
        self.memo[key] = entry
        return entry[0]

    def opt(self, k: int, j_mask: int, z_mask: int):
        if k == 0:
            return self.stage0(j_mask, z_mask)
        key = (k, j_mask, z_mask)
        hit = self.memo.get(key)
        if hit is not None:
            return hit[0]
        n_ulc = bin(j_mask & self.ulc_mask).count("1")
        n_dlc = bin(j_mask & self.dlc_mask).count("1")
        n_z = bin(z_mask).count("1")
        if n_ulc > k or n_dlc > n_z:
            return self._store(key, (INFEASIBLE, None))

        best, best_dec = INFEASIBLE, None

        def consider(value, dec):
            nonlocal best, best_dec
            self.decisions += 1
            if value is INFEASIBLE:
                return
            if best_dec is None or better(value, dec.sort_key(), best, best_dec.sort_key()):
                best, best_dec = value, dec

        ulc_forced = k <= n_ulc
        cs_choices = [] if ulc_forced else [0]
        cs_choices += [j for j in self.s.ulc_ids if j_mask & (1 << (j - 1))]
        allow_cell_mode = not ulc_forced and not self.opts.force_d2d_mode_only and n_dlc < n_z
        if allow_cell_mode:
            cs_choices += [j for j in self.s.d2d_ids if j_mask & (1 << (j - 1))]

        for cs in cs_choices:
            cs_bit = (1 << (cs - 1)) if cs else 0
            rest = j_mask & ~cs_bit
            cs_t = (cs,) if cs else ()
            if cs == 0 or not self.d2d_mask & cs_bit:
                for a_mask, (a_val, _, a_mem) in self.tables.side(k, cs).items():
                    if a_mask & ~rest:
                        continue
                    sub = self.opt(k - 1, rest & ~a_mask, z_mask)
                    if sub is INFEASIBLE:
                        self.decisions += 1
                        continue
                    consider(a_val + sub, Decision(cs_t, a_mem, None, ()))
                continue
            for d in self._z_ids(z_mask):
                z_rest = z_mask & ~self._z_bit(d)
                for union, (u, a_mem, b_mem) in self.tables.pair(k, cs, d).items():
                    if union & ~rest:
                        continue
                    sub = self.opt(k - 1, rest & ~union, z_rest)
                    if sub is INFEASIBLE:
                        self.decisions += 1
                        continue
                    consider(u + sub, Decision(cs_t, a_mem, d, b_mem))
        return self._store(key, (best, best_dec))

    def stage0(self, j_mask: int, z_mask: int):
        """Channel assignment only: downlink channels in Z, every D2D link in D2D mode."""
        key = (0, j_mask, z_mask)
        hit = self.memo.get(key)
        if hit is not None:
            return hit[0]
        n_dlc = bin(j_mask & self.dlc_mask).count("1")
        n_z = bin(z_mask).count("1")
        if j_mask & self.ulc_mask or n_dlc > n_z:
            return self._store(key, (INFEASIBLE, None))
        if z_mask == 0:
            return self._store(key, (0.0, None))

        channel = self._z_ids(z_mask)[-1]
        z_rest = z_mask & ~self._z_bit(channel)
        occupants = [] if n_dlc == n_z else [0]
        occupants += [j for j in self.s.dlc_ids if j_mask & (1 << (j - 1))]
        best, best_key, best_dec = INFEASIBLE, None, None
        for cs in occupants:
            rest = j_mask & ~((1 << (cs - 1)) if cs else 0)
            cs_t = (cs,) if cs else ()
            for b_mask, (b_val, _, b_mem) in self.tables.side(channel, cs).items():
                self.decisions += 1
                if b_mask & ~rest:
                    continue
                sub = self.stage0(rest & ~b_mask, z_rest)
                if sub is INFEASIBLE:
                    continue
                dkey = (cs_t, b_mem)
                if better(b_val + sub, dkey, best, best_key):
                    best, best_key, best_dec = b_val + sub, dkey, (channel, cs_t, b_mem)
        return self._store(key, (best, best_dec))

    def reconstruct(self) -> Assignment:
        s = self.s
        rho, cell_mode = set(), set()
        j_mask, z_mask = _bits(range(1, s.n + 1)), _bits(range(1, s.m_d + 1))
        for k in range(s.m_u, 0, -1):
            dec = self.memo[(k, j_mask, z_mask)][1]
            for j in dec.x_cs + dec.x_dsu:
                rho.add((k, j))
            if dec.d is not None:
                for j in dec.x_cs + dec.x_dsd:
                    rho.add((dec.d, j))
                cell_mode.update(dec.x_cs)
                z_mask &= ~self._z_bit(dec.d)
            j_mask &= ~_bits(dec.x_all)
        while z_mask:
            channel, cs_t, members = self.memo[(0, j_mask, z_mask)][1]
            for j in cs_t + members:
                rho.add((channel, j))
            j_mask &= ~_bits(cs_t + members)
            z_mask &= ~self._z_bit(channel)
        return Assignment(frozenset(rho), frozenset(cell_mode))


def enumerate_decisions(scenario: Scenario, k: int, j_ids, z_ids, opts: DpOptions = DpOptions()) -> list:
    """Every SINR-feasible decision at stage ``k >= 1`` from state (J, Z), in key order."""
    if k < 1:
        raise ValueError("decisions exist only at stages k >= 1")
    tables = _Tables(scenario, opts)
    j_set = set(j_ids)
    z_list = sorted(z_ids)
    n_ulc = sum(1 for j in j_set if scenario.link(j).kind is LinkKind.UPLINK_CELLULAR)
    n_dlc = sum(1 for j in j_set if scenario.link(j).kind is LinkKind.DOWNLINK_CELLULAR)
    j_mask = _bits(j_set)
    out = []
    ulc_forced = k <= n_ulc
    cs_choices = [] if ulc_forced else [0]
    cs_choices += sorted(j for j in j_set if scenario.link(j).kind is LinkKind.UPLINK_CELLULAR)
    if not ulc_forced and not opts.force_d2d_mode_only and n_dlc < len(z_list):
        cs_choices += sorted(j for j in j_set if scenario.link(j).kind is LinkKind.D2D)
    for cs in cs_choices:
        rest = j_mask & ~((1 << (cs - 1)) if cs else 0)
        cs_t = (cs,) if cs else ()
        ups = [(m, v) for m, v in tables.side(k, cs).items() if not m & ~rest]
        if cs == 0 or scenario.link(cs).is_cellular:
            out += [Decision(cs_t, v[2], None, ()) for _, v in ups]
            continue
        for d in z_list:
            for a_mask, a in ups:
                for b_mask, b in tables.side(d, cs).items():
                    if b_mask & (~rest | a_mask):
                        continue
                    dec = Decision(cs_t, a[2], d, b[2])
                    if share_utility(scenario, k, dec, opts.per_hop_qos) is not INFEASIBLE:
                        out.append(dec)
    return sorted(out, key=Decision.sort_key)


def stage0_solve(scenario: Scenario, j_ids, z_ids, opts: DpOptions = DpOptions()):
    """Optimal value and assignment fragment with only the downlink channels ``z_ids``.

    Returns (value or INFEASIBLE, Assignment or None).
    """
    solver = _Solver(scenario, opts)
    j_mask = _bits(j_ids)
    z_mask = 0
    for c in z_ids:
        z_mask |= solver._z_bit(c)
    value = solver.stage0(j_mask, z_mask)
    if value is INFEASIBLE:
        return INFEASIBLE, None
    rho = set()
    while z_mask:
        channel, cs_t, members = solver.memo[(0, j_mask, z_mask)][1]
        rho.update((channel, j) for j in cs_t + members)
        j_mask &= ~_bits(cs_t + members)
        z_mask &= ~solver._z_bit(channel)
    return value, Assignment(frozenset(rho))


def state_bound(scenario: Scenario) -> int:
    """Loose cap on memo entries: one table of (J, Z) per uplink stage plus stage 0."""
    per_stage = 2 ** scenario.n * 2 ** scenario.m_d
    return scenario.m_u * per_stage + per_stage


def dp_state_count_check(scenario: Scenario, stats: SolveStats) -> bool:
    return stats.states_visited <= state_bound(scenario)


def dp_solve(scenario: Scenario, opts: DpOptions = DpOptions(), **kwargs) -> SolveResult:
    """Solve to optimality; keyword arguments override fields of ``opts``."""
    if kwargs:
        opts = DpOptions(**{**opts.__dict__, **kwargs})
    start = time.perf_counter()
    solver = _Solver(scenario, opts)
    value = solver.opt(scenario.m_u, _bits(range(1, scenario.n + 1)), _bits(range(1, scenario.m_d + 1)))
    assignment = None if value is INFEASIBLE else solver.reconstruct()
    stats = SolveStats(states_visited=len(solver.memo), decisions_enumerated=solver.decisions)
    stats.wall_time = time.perf_counter() - start
    stats.bound_ok = dp_state_count_check(scenario, stats)
    stats.extra["dp_value"] = None if value is INFEASIBLE else value
    stats.extra["stage0_states"] = sum(1 for key in solver.memo if key[0] == 0)
    result = make_result(scenario, assignment, stats, _tag("dp", opts))
    if assignment is not None and (not result.feasible or not math.isclose(
            result.objective, value, rel_tol=0, abs_tol=1e-9)):
        raise AssertionError("DP reconstruction disagrees with its memoized optimum")
    return result


def _tag(name: str, opts) -> str:
    parts = [name]
    if getattr(opts, "force_d2d_mode_only", False):
        parts.append("ca-only")
    if getattr(opts, "restrict_one_d2d_per_channel", False):
        parts.append("restricted")
    return "+".join(parts)
