"""Random single-cell instances: uniform cellular users, clustered D2D pairs.

Gains follow ``K * beta * zeta * d**-alpha`` with unit-mean exponential
small-scale fading ``beta`` (per channel and ordered node pair) and
log-normal shadowing ``zeta`` (per ordered node pair).

The default parameter values below are this package's own choice.
"""
from __future__ import annotations

import dataclasses
import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import Link, LinkKind, Scenario

MIN_DISTANCE_M = 1.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class GenConfig:
    cell_radius_m: float = 500.0
    d2d_cluster_radius_m: float = 150.0
    d2d_pair_distance_max_m: float = 50.0
    n_clusters: int = 1
    n_uc: int = 1
    n_dc: int = 1
    n_d: int = 3
    m_u: int = 2
    m_d: int = 2
    path_loss_constant: float = 1e-3
    path_loss_exponent: float = 3.5
    shadow_sigma_db: float = 8.0
    noise_w: float = dbm_to_watts(-114.0)
    power_cellular_w: float = 0.2
    power_d2d_w: float = 0.2
    bs_total_power_w: float = 40.0
    weight_cellular: float = 1.0
    weight_d2d: float = 1.0
    sinr_min_cellular_db: float = 0.0
    sinr_min_d2d_db: float = 0.0
    master_seed: int = 0

    def __post_init__(self):
        positive = ("cell_radius_m", "d2d_cluster_radius_m", "d2d_pair_distance_max_m",
                    "path_loss_constant", "path_loss_exponent", "noise_w",
                    "power_cellular_w", "power_d2d_w", "bs_total_power_w")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if min(self.n_uc, self.n_dc, self.n_d, self.m_u, self.m_d) < 0:
            raise ValueError("counts must be non-negative")
        if self.m_u < self.n_uc or self.m_d < self.n_dc:
            raise ValueError("need m_u >= n_uc and m_d >= n_dc")
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")
        if self.shadow_sigma_db < 0:
            raise ValueError("shadow_sigma_db must be >= 0")

    def replace(self, **changes) -> "GenConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GenConfig":
        """Build from a JSON mapping; ``noise_dbm`` is accepted in place of ``noise_w``."""
        data = dict(data)
        if "noise_dbm" in data:
            data["noise_w"] = dbm_to_watts(data.pop("noise_dbm"))
        counts = data.pop("counts", None)
        if counts:
            data.update(counts)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)


class RandomStream:
    """Named, order-independent substreams derived from one master seed."""

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed)

    def substream(self, name: str) -> np.random.Generator:
        key = zlib.crc32(name.encode())
        return np.random.default_rng(np.random.SeedSequence(self.master_seed, spawn_key=(key,)))


def _uniform_disc(rng: np.random.Generator, radius: float, size: int) -> np.ndarray:
    r = radius * np.sqrt(rng.random(size))
    theta = 2.0 * np.pi * rng.random(size)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def node_layout(cfg: GenConfig) -> dict:
    """Node indices: BS, cellular devices in link order, then (tx, rx) per D2D link."""
    n_c = cfg.n_uc + cfg.n_dc
    cellular = list(range(1, n_c + 1))
    d2d = [(n_c + 1 + 2 * k, n_c + 2 + 2 * k) for k in range(cfg.n_d)]
    return {"cellular": cellular, "d2d": d2d, "n_nodes": 1 + n_c + 2 * cfg.n_d}


def place_nodes(cfg: GenConfig, stream: RandomStream) -> np.ndarray:
    """Positions in meters, shape (n_nodes, 2), BS at the origin.

    D2D links are spread round-robin over ``n_clusters`` clusters.
    """
    rng = stream.substream("placement")
    n_c = cfg.n_uc + cfg.n_dc
    # fixed draw order keeps each group's values independent of the other counts
    cellular = _uniform_disc(rng, cfg.cell_radius_m, n_c)
    centers = _uniform_disc(stream.substream("placement/clusters"), cfg.cell_radius_m, cfg.n_clusters)
    d2d_rng = stream.substream("placement/d2d")
    tx = _uniform_disc(d2d_rng, cfg.d2d_cluster_radius_m, cfg.n_d)
    rx = _uniform_disc(d2d_rng, cfg.d2d_pair_distance_max_m, cfg.n_d)
    tx = tx + centers[np.arange(cfg.n_d) % cfg.n_clusters]
    rx = rx + tx

    pos = np.zeros((node_layout(cfg)["n_nodes"], 2))
    pos[1:1 + n_c] = cellular
    pos[1 + n_c::2] = tx
    pos[2 + n_c::2] = rx
    return pos


def path_loss(cfg: GenConfig, distance_m):
    d = np.maximum(distance_m, MIN_DISTANCE_M)
    return cfg.path_loss_constant * d ** (-cfg.path_loss_exponent)


def _shadowing(cfg: GenConfig, rng: np.random.Generator, size) -> np.ndarray:
    return 10.0 ** (cfg.shadow_sigma_db * rng.standard_normal(size) / 10.0)


def sample_gain(cfg: GenConfig, stream: RandomStream, distance_m: float,
                fading: Optional[float] = None, shadowing: Optional[float] = None) -> float:
    """One linear gain at ``distance_m``; pass ``fading``/``shadowing`` to pin either factor."""
    if fading is None:
        fading = stream.substream("fading").exponential(1.0)
    if shadowing is None:
        shadowing = _shadowing(cfg, stream.substream("shadowing"), None)
    return float(path_loss(cfg, distance_m) * fading * shadowing)


def gain_tensor(cfg: GenConfig, stream: RandomStream, positions: np.ndarray) -> np.ndarray:
    n_nodes = positions.shape[0]
    n_ch = cfg.m_u + cfg.m_d
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    shadow = _shadowing(cfg, stream.substream("shadowing"), (n_nodes, n_nodes))
    fading = stream.substream("fading").exponential(1.0, size=(n_ch, n_nodes, n_nodes))
    return path_loss(cfg, dist)[None] * shadow[None] * fading


def generate(cfg: GenConfig) -> Scenario:
    stream = RandomStream(cfg.master_seed)
    layout = node_layout(cfg)
    positions = place_nodes(cfg, stream)
    gains = gain_tensor(cfg, stream, positions)

    sinr_c = db_to_linear(cfg.sinr_min_cellular_db)
    sinr_d = db_to_linear(cfg.sinr_min_d2d_db)
    links = []
    for k, device in enumerate(layout["cellular"]):
        kind = LinkKind.UPLINK_CELLULAR if k < cfg.n_uc else LinkKind.DOWNLINK_CELLULAR
        links.append(Link(len(links) + 1, kind, weight=cfg.weight_cellular, sinr_min=sinr_c,
                          power_cellular_w=cfg.power_cellular_w, device=device))
    for tx, rx in layout["d2d"]:
        links.append(Link(len(links) + 1, LinkKind.D2D, weight=cfg.weight_d2d, sinr_min=sinr_d,
                          power_cellular_w=cfg.power_cellular_w, power_d2d_w=cfg.power_d2d_w,
                          tx_device=tx, rx_device=rx))
    return Scenario(tuple(links), cfg.m_u, cfg.m_d, gains, cfg.noise_w, cfg.bs_total_power_w, positions)
