"""Problem instance, SINR arithmetic and the feasibility checker.

Links and channels carry 1-based ids. Channels ``1..m_u`` are uplink and
``m_u+1..m_u+m_d`` downlink; links are ordered uplink cellular, downlink
cellular, then D2D. Node 0 is the base station.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

BS = 0


class LinkKind(str, enum.Enum):
    UPLINK_CELLULAR = "ulc"
    DOWNLINK_CELLULAR = "dlc"
    D2D = "d2d"


class ContractError(ValueError):
    """Raised when an operation is called outside its precondition."""


class _Infeasible:
    """Marker for "no feasible completion"; orders below every number."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFEASIBLE"

    def __reduce__(self):
        return (_Infeasible, ())

    def __lt__(self, other):
        return other is not self

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return other is self


INFEASIBLE = _Infeasible()

# absolute tolerance for value comparisons inside the solvers
TIE_EPS = 1e-12


def better(value, key, best_value, best_key) -> bool:
    """True if (value, key) beats the incumbent: larger value, ties to the smaller key."""
    if value is INFEASIBLE:
        return False
    if best_value is INFEASIBLE or best_value is None:
        return True
    if value > best_value + TIE_EPS:
        return True
    return abs(value - best_value) <= TIE_EPS and key < best_key


@dataclass(frozen=True)
class Link:
    id: int
    kind: LinkKind
    weight: float = 1.0
    sinr_min: float = 1.0
    power_cellular_w: float = 0.2
    power_d2d_w: float = 0.0
    device: Optional[int] = None
    tx_device: Optional[int] = None
    rx_device: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", LinkKind(self.kind))
        if self.weight < 0:
            raise ValueError(f"link {self.id}: negative weight")
        if not self.sinr_min > 0:
            raise ValueError(f"link {self.id}: sinr_min must be > 0")
        if self.kind is LinkKind.D2D:
            if self.tx_device is None or self.rx_device is None:
                raise ValueError(f"link {self.id}: D2D link needs tx and rx devices")
            if self.tx_device == self.rx_device:
                raise ValueError(f"link {self.id}: tx_device == rx_device")
            if BS in (self.tx_device, self.rx_device):
                raise ValueError(f"link {self.id}: D2D endpoint is the base station")
        elif self.device is None or self.device == BS:
            raise ValueError(f"link {self.id}: cellular link needs a user device")

    @property
    def is_cellular(self) -> bool:
        return self.kind is not LinkKind.D2D

    @property
    def nodes(self) -> tuple[int, ...]:
        if self.kind is LinkKind.D2D:
            return (self.tx_device, self.rx_device)
        return (self.device,)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Immutable problem instance.

    ``gains[i-1, a, b]`` is the linear power gain from transmitting node ``a``
    to receiving node ``b`` on channel ``i``.
    """

    links: tuple[Link, ...]
    m_u: int
    m_d: int
    gains: np.ndarray
    noise_w: float
    bs_total_power_w: float
    positions: Optional[np.ndarray] = None

    def __post_init__(self):
        links = tuple(self.links)
        object.__setattr__(self, "links", links)
        gains = np.array(self.gains, dtype=float)
        gains.setflags(write=False)
        object.__setattr__(self, "gains", gains)
        if self.positions is not None:
            pos = np.array(self.positions, dtype=float)
            pos.setflags(write=False)
            object.__setattr__(self, "positions", pos)

        kinds = [link.kind for link in links]
        n_uc = kinds.count(LinkKind.UPLINK_CELLULAR)
        n_dc = kinds.count(LinkKind.DOWNLINK_CELLULAR)
        expected = ([LinkKind.UPLINK_CELLULAR] * n_uc + [LinkKind.DOWNLINK_CELLULAR] * n_dc
                    + [LinkKind.D2D] * (len(links) - n_uc - n_dc))
        if kinds != expected:
            raise ValueError("links must be ordered uplink cellular, downlink cellular, D2D")
        if [link.id for link in links] != list(range(1, len(links) + 1)):
            raise ValueError("link ids must be 1..N in order")
        if self.m_u < n_uc or self.m_d < n_dc:
            raise ValueError("need m_u >= n_uc and m_d >= n_dc")
        if gains.ndim != 3 or gains.shape[0] != self.m_u + self.m_d or gains.shape[1] != gains.shape[2]:
            raise ValueError(f"gains must have shape (M, nodes, nodes), got {gains.shape}")
        if not np.all(np.isfinite(gains)) or np.any(gains < 0):
            raise ValueError("gains must be finite and non-negative")
        if not self.noise_w > 0:
            raise ValueError("noise_w must be > 0")
        n_nodes = gains.shape[1]
        for link in links:
            if any(not 0 <= node < n_nodes for node in link.nodes):
                raise ValueError(f"link {link.id} references a node outside the gain table")

        object.__setattr__(self, "n_uc", n_uc)
        object.__setattr__(self, "n_dc", n_dc)

    @property
    def n(self) -> int:
        return len(self.links)

    @property
    def n_c(self) -> int:
        return self.n_uc + self.n_dc

    @property
    def n_d(self) -> int:
        return self.n - self.n_c

    @property
    def m(self) -> int:
        return self.m_u + self.m_d

    @property
    def n_nodes(self) -> int:
        return self.gains.shape[1]

    def link(self, j: int) -> Link:
        return self.links[j - 1]

    @property
    def uplink_channels(self) -> range:
        return range(1, self.m_u + 1)

    @property
    def downlink_channels(self) -> range:
        return range(self.m_u + 1, self.m + 1)

    @property
    def channels(self) -> range:
        return range(1, self.m + 1)

    @property
    def ulc_ids(self) -> range:
        return range(1, self.n_uc + 1)

    @property
    def dlc_ids(self) -> range:
        return range(self.n_uc + 1, self.n_c + 1)

    @property
    def cellular_ids(self) -> range:
        return range(1, self.n_c + 1)

    @property
    def d2d_ids(self) -> range:
        return range(self.n_c + 1, self.n + 1)

    def is_uplink(self, i: int) -> bool:
        if not 1 <= i <= self.m:
            raise ContractError(f"channel {i} outside 1..{self.m}")
        return i <= self.m_u

    def gain(self, i: int, tx: int, rx: int) -> float:
        return float(self.gains[i - 1, tx, rx])


@dataclass(frozen=True)
class Assignment:
    """Decision variables: channel/link incidence plus the set of D2D links in cellular mode.

    Cellular links always have x = 1, so only D2D links appear in ``cell_mode``.
    """

    rho: frozenset = frozenset()
    cell_mode: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "rho", frozenset((int(i), int(j)) for i, j in self.rho))
        object.__setattr__(self, "cell_mode", frozenset(int(j) for j in self.cell_mode))

    def channels_of(self, j: int) -> list[int]:
        return sorted(i for i, jj in self.rho if jj == j)

    def occupants(self, i: int) -> list[int]:
        return sorted(j for ii, j in self.rho if ii == i)

    def x(self, scenario: Scenario, j: int) -> bool:
        return scenario.link(j).is_cellular or j in self.cell_mode

    def sort_key(self) -> tuple:
        return (tuple(sorted(self.rho)), tuple(sorted(self.cell_mode)))

    def validate_ranges(self, scenario: Scenario) -> None:
        for i, j in self.rho:
            if not 1 <= i <= scenario.m or not 1 <= j <= scenario.n:
                raise ContractError(f"pair (channel {i}, link {j}) out of range")
        for j in self.cell_mode:
            if j not in scenario.d2d_ids:
                raise ContractError(f"cell_mode entry {j} is not a D2D link")


@dataclass(frozen=True)
class CoChannelSets:
    lc: frozenset
    ld: frozenset


@dataclass
class SolveStats:
    states_visited: int = 0
    decisions_enumerated: int = 0
    wall_time: float = 0.0
    bound_ok: Optional[bool] = None
    extra: dict = field(default_factory=dict)


@dataclass
class SolveResult:
    assignment: Optional[Assignment]
    objective: Optional[float]
    per_link_rate: dict
    feasible: bool
    stats: SolveStats = field(default_factory=SolveStats)
    algo: str = ""

    def mode_counts(self, scenario: Scenario) -> tuple[int, int, int]:
        """(#cellular-mode D2D, #D2D-mode, #inactive) over the D2D links."""
        if self.assignment is None:
            return (0, 0, scenario.n_d)
        cell = d2d = inactive = 0
        for j in scenario.d2d_ids:
            if not self.assignment.channels_of(j):
                inactive += 1
            elif j in self.assignment.cell_mode:
                cell += 1
            else:
                d2d += 1
        return cell, d2d, inactive


def tx_rx_nodes(link: Link, mode: bool, channel: int, scenario: Scenario) -> tuple[int, int]:
    uplink = scenario.is_uplink(channel)
    if link.kind is LinkKind.UPLINK_CELLULAR:
        if not uplink:
            raise ContractError(f"uplink cellular link {link.id} on downlink channel {channel}")
        return link.device, BS
    if link.kind is LinkKind.DOWNLINK_CELLULAR:
        if uplink:
            raise ContractError(f"downlink cellular link {link.id} on uplink channel {channel}")
        return BS, link.device
    if not mode:
        return link.tx_device, link.rx_device
    return (link.tx_device, BS) if uplink else (BS, link.rx_device)


def tx_power(link: Link, mode: bool, channel: int, scenario: Scenario) -> float:
    uplink = scenario.is_uplink(channel)
    if link.kind is LinkKind.D2D and not mode:
        return link.power_d2d_w
    if link.kind is LinkKind.DOWNLINK_CELLULAR and uplink:
        raise ContractError(f"downlink cellular link {link.id} on uplink channel {channel}")
    if uplink:
        return link.power_cellular_w
    if link.kind is LinkKind.UPLINK_CELLULAR:
        raise ContractError(f"uplink cellular link {link.id} on downlink channel {channel}")
    return scenario.bs_total_power_w / scenario.m_d


def _tx_term(scenario: Scenario, channel: int, z: int, mode: bool) -> tuple[int, float]:
    link = scenario.link(z)
    tx, _ = tx_rx_nodes(link, mode, channel, scenario)
    return tx, tx_power(link, mode, channel, scenario)


def sinr(scenario: Scenario, channel: int, lc: Iterable[int], ld: Iterable[int], j: int, x_j: bool) -> float:
    """Received SINR of link ``j`` on ``channel`` given the co-channel occupants."""
    lc, ld = sorted(lc), sorted(ld)
    if (j not in lc) if x_j else (j not in ld):
        raise ContractError(f"link {j} is not among the {'L^C' if x_j else 'L^D'} occupants of channel {channel}")
    link = scenario.link(j)
    tx, rx = tx_rx_nodes(link, x_j, channel, scenario)
    signal = tx_power(link, x_j, channel, scenario) * scenario.gain(channel, tx, rx)
    interference = scenario.noise_w
    for members, mode in ((lc, True), (ld, False)):
        for z in members:
            if z == j:
                continue
            z_tx, p = _tx_term(scenario, channel, z, mode)
            interference += p * scenario.gain(channel, z_tx, rx)
    return signal / interference


def rate(value: float) -> float:
    return math.log2(1.0 + value)


def co_channel_sets(scenario: Scenario, assignment: Assignment, i: int) -> CoChannelSets:
    lc, ld = set(), set()
    for j in assignment.occupants(i):
        (lc if assignment.x(scenario, j) else ld).add(j)
    return CoChannelSets(frozenset(lc), frozenset(ld))


def _link_sinr(scenario: Scenario, assignment: Assignment, j: int) -> Optional[float]:
    """Effective SINR of an active link (min over hops in cellular mode), None if inactive."""
    chans = assignment.channels_of(j)
    if not chans:
        return None
    x_j = assignment.x(scenario, j)
    values = []
    for i in chans:
        occ = co_channel_sets(scenario, assignment, i)
        values.append(sinr(scenario, i, occ.lc, occ.ld, j, x_j))
    return min(values) if x_j and scenario.link(j).kind is LinkKind.D2D else values[0]


def link_rate(scenario: Scenario, assignment: Assignment, j: int) -> float:
    value = _link_sinr(scenario, assignment, j)
    return 0.0 if value is None else rate(value)


def per_link_rates(scenario: Scenario, assignment: Assignment) -> dict[int, float]:
    return {j: link_rate(scenario, assignment, j) for j in range(1, scenario.n + 1)}


def objective(scenario: Scenario, assignment: Assignment) -> float:
    return math.fsum(scenario.link(j).weight * r for j, r in per_link_rates(scenario, assignment).items())


@dataclass(frozen=True)
class Violation:
    tag: str
    link: Optional[int] = None
    channel: Optional[int] = None


@dataclass(frozen=True)
class Verdict:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def tags(self) -> set[str]:
        return {v.tag for v in self.violations}


def structural_violations(scenario: Scenario, assignment: Assignment) -> list[Violation]:
    """Constraints 6c-6g, which do not involve any SINR."""
    assignment.validate_ranges(scenario)
    out = []
    for i in scenario.channels:
        occ = co_channel_sets(scenario, assignment, i)
        if len(occ.lc) > 1:
            out.append(Violation("6c", channel=i))
    for j in scenario.cellular_ids:
        chans = assignment.channels_of(j)
        if len(chans) != 1:
            out.append(Violation("6d", link=j))
        uplink_link = scenario.link(j).kind is LinkKind.UPLINK_CELLULAR
        for i in chans:
            if scenario.is_uplink(i) != uplink_link:
                out.append(Violation("6g", link=j, channel=i))
    for j in scenario.d2d_ids:
        chans = assignment.channels_of(j)
        if j in assignment.cell_mode:
            n_up = sum(scenario.is_uplink(i) for i in chans)
            n_down = len(chans) - n_up
            if n_up > 1 or n_down > 1 or (chans and (n_up != 1 or n_down != 1)):
                out.append(Violation("6f", link=j))
        elif len(chans) > 1:
            out.append(Violation("6e", link=j))
    return out


def check_feasible(scenario: Scenario, assignment: Assignment) -> Verdict:
    """Every violated constraint among 6a-6g.

    SINR floors are only evaluated for links whose channels all have the
    direction their kind allows; a misdirected cellular link is reported
    under 6g and left out of the SINR evaluation entirely.
    """
    violations = structural_violations(scenario, assignment)
    misdirected = {v.link for v in violations if v.tag == "6g"}
    if misdirected:
        assignment = Assignment(
            frozenset((i, j) for i, j in assignment.rho if j not in misdirected),
            assignment.cell_mode,
        )
    for j in range(1, scenario.n + 1):
        if j in misdirected:
            continue
        value = _link_sinr(scenario, assignment, j)
        if value is None:
            continue
        if value < scenario.link(j).sinr_min:
            tag = "6a" if scenario.link(j).is_cellular else "6b"
            out_channel = assignment.channels_of(j)[0] if len(assignment.channels_of(j)) == 1 else None
            violations.append(Violation(tag, link=j, channel=out_channel))
    return Verdict(tuple(violations))


def make_result(scenario: Scenario, assignment: Optional[Assignment], stats: SolveStats, algo: str) -> SolveResult:
    """Package a solver outcome, recomputing the objective from the assignment."""
    if assignment is None:
        return SolveResult(None, None, {}, False, stats, algo)
    feasible = check_feasible(scenario, assignment).ok
    return SolveResult(
        assignment,
        objective(scenario, assignment),
        per_link_rates(scenario, assignment),
        feasible,
        stats,
        algo,
    )
