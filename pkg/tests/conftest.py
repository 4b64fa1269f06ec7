import numpy as np
import pytest

from d2dalloc.model import Link, LinkKind, Scenario
from d2dalloc.scenario import GenConfig, generate


def build(n_uc=0, n_dc=0, n_d=0, m_u=0, m_d=0, cross=0.0, noise=1.0, bs_power=None,
          p_c=1.0, p_d=1.0, weight=1.0, sinr_min=1.0, gains=None):
    """Hand-made scenario with the generator's node layout.

    Every gain starts at ``cross``; set entries through ``gains`` as
    {(channel, tx, rx): value} with channel None meaning all channels.
    Node 0 is the BS, then cellular devices, then (tx, rx) per D2D link.
    """
    n_c = n_uc + n_dc
    n_nodes = 1 + n_c + 2 * n_d
    m = m_u + m_d
    g = np.full((m, n_nodes, n_nodes), float(cross))
    for (ch, tx, rx), value in (gains or {}).items():
        if ch is None:
            g[:, tx, rx] = value
        else:
            g[ch - 1, tx, rx] = value
    links = []
    for k in range(n_c):
        kind = LinkKind.UPLINK_CELLULAR if k < n_uc else LinkKind.DOWNLINK_CELLULAR
        links.append(Link(k + 1, kind, weight=weight, sinr_min=sinr_min, power_cellular_w=p_c, device=k + 1))
    for k in range(n_d):
        links.append(Link(n_c + k + 1, LinkKind.D2D, weight=weight, sinr_min=sinr_min, power_cellular_w=p_c,
                          power_d2d_w=p_d, tx_device=n_c + 1 + 2 * k, rx_device=n_c + 2 + 2 * k))
    if bs_power is None:
        bs_power = float(max(m_d, 1))
    return Scenario(tuple(links), m_u, m_d, g, noise, bs_power)


def d2d_nodes(n_c, k):
    """(tx, rx) node ids of the k-th D2D link (0-based) in a ``build`` scenario."""
    return n_c + 1 + 2 * k, n_c + 2 + 2 * k


@pytest.fixture
def small_ensemble():
    """Scenarios shaped like the oracle-equivalence ensemble."""
    return [generate(GenConfig(n_d=1 + s % 3, master_seed=s)) for s in range(30)]


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_report(request):
    """Record a criterion verdict; printed now and again in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def record(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
