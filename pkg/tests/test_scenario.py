import math

import numpy as np
import pytest

from d2dalloc import io as dio
from d2dalloc.model import LinkKind
from d2dalloc.scenario import (
    GenConfig,
    RandomStream,
    db_to_linear,
    dbm_to_watts,
    generate,
    node_layout,
    place_nodes,
    sample_gain,
)


def test_unit_conversions():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert db_to_linear(0.0) == 1.0
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(-114.0) == pytest.approx(10 ** -14.4)


@pytest.mark.parametrize("bad", [
    {"cell_radius_m": 0.0},
    {"path_loss_exponent": -1.0},
    {"n_uc": 3, "m_u": 2},
    {"n_dc": 2, "m_d": 1},
    {"power_d2d_w": 0.0},
])
def test_config_rejects(bad):
    with pytest.raises(ValueError):
        GenConfig(**bad)


def test_config_from_dict():
    cfg = GenConfig.from_dict({"noise_dbm": -100.0, "counts": {"n_d": 5, "m_u": 3}})
    assert cfg.n_d == 5 and cfg.m_u == 3
    assert cfg.noise_w == pytest.approx(1e-13)
    with pytest.raises(ValueError):
        GenConfig.from_dict({"bogus": 1})


def test_substreams_independent_of_call_order():
    a, b = RandomStream(9), RandomStream(9)
    x = a.substream("placement").random(3)
    a.substream("fading").random(100)
    b.substream("fading").random(7)
    assert np.array_equal(x, b.substream("placement").random(3))
    assert not np.array_equal(x, RandomStream(10).substream("placement").random(3))


class TestPlacement:
    cfg = GenConfig(n_uc=3, n_dc=2, m_u=3, m_d=2, n_d=40, n_clusters=3)

    def test_norm_bound(self):
        for seed in range(20):
            cfg = self.cfg.replace(master_seed=seed)
            pos = place_nodes(cfg, RandomStream(seed))
            limit = cfg.cell_radius_m + cfg.d2d_cluster_radius_m + cfg.d2d_pair_distance_max_m
            assert np.all(np.hypot(pos[:, 0], pos[:, 1]) <= limit + 1e-9)
            assert np.array_equal(pos[0], [0.0, 0.0])

    def test_cellular_in_cell(self):
        pos = place_nodes(self.cfg, RandomStream(1))
        assert np.all(np.hypot(*pos[1:6].T) <= self.cfg.cell_radius_m)

    def test_pair_distance(self):
        for seed in range(20):
            pos = place_nodes(self.cfg, RandomStream(seed))
            for tx, rx in node_layout(self.cfg)["d2d"]:
                assert np.hypot(*(pos[tx] - pos[rx])) <= self.cfg.d2d_pair_distance_max_m

    def test_deterministic(self):
        a = place_nodes(self.cfg, RandomStream(4))
        b = place_nodes(self.cfg, RandomStream(4))
        assert a.tobytes() == b.tobytes()


class TestSampleGain:
    def test_unit_fading(self):
        cfg = GenConfig(path_loss_constant=1e-3, path_loss_exponent=2.0)
        assert sample_gain(cfg, RandomStream(0), 10.0, fading=1.0, shadowing=1.0) == pytest.approx(1e-5)

    def test_inverse_power_law(self):
        cfg = GenConfig(path_loss_exponent=4.0)
        near = sample_gain(cfg, RandomStream(0), 20.0, fading=1.0, shadowing=1.0)
        far = sample_gain(cfg, RandomStream(0), 40.0, fading=1.0, shadowing=1.0)
        assert near / far == pytest.approx(16.0)

    def test_distance_clamp(self):
        cfg = GenConfig()
        at_zero = sample_gain(cfg, RandomStream(0), 0.0, fading=1.0, shadowing=1.0)
        assert at_zero == pytest.approx(cfg.path_loss_constant)

    def test_fading_unit_mean(self):
        cfg = GenConfig(shadow_sigma_db=0.0, path_loss_constant=1.0)
        stream = RandomStream(123)
        rng = stream.substream("fading")
        draws = rng.exponential(1.0, size=100_000)
        assert 0.99 <= draws.mean() <= 1.01
        # the gain at d=1 with no shadowing is the fading draw itself
        assert sample_gain(cfg, RandomStream(123), 1.0) == pytest.approx(
            RandomStream(123).substream("fading").exponential(1.0))


class TestGenerate:
    def test_counts(self):
        cfg = GenConfig(n_uc=2, n_dc=1, n_d=4, m_u=3, m_d=2)
        sc = generate(cfg)
        assert (sc.n_uc, sc.n_dc, sc.n_d, sc.m_u, sc.m_d) == (2, 1, 4, 3, 2)
        assert sc.gains.shape == (5, 1 + 3 + 8, 1 + 3 + 8)
        assert [link.kind for link in sc.links] == [LinkKind.UPLINK_CELLULAR] * 2 + \
            [LinkKind.DOWNLINK_CELLULAR] + [LinkKind.D2D] * 4

    def test_byte_identical(self):
        cfg = GenConfig(master_seed=77)
        assert dio.dumps(dio.scenario_to_dict(generate(cfg))) == dio.dumps(dio.scenario_to_dict(generate(cfg)))

    def test_no_reciprocity(self):
        sc = generate(GenConfig(master_seed=3))
        assert sc.gains[0, 3, 4] != sc.gains[0, 4, 3]

    def test_fading_differs_per_channel(self):
        sc = generate(GenConfig(master_seed=3))
        assert sc.gains[0, 3, 4] != sc.gains[1, 3, 4]

    def test_sinr_floor_conversion(self):
        sc = generate(GenConfig(sinr_min_d2d_db=10.0, sinr_min_cellular_db=3.0))
        assert sc.link(3).sinr_min == pytest.approx(10.0)
        assert sc.link(1).sinr_min == pytest.approx(db_to_linear(3.0))

    @pytest.mark.slow
    def test_finite_positive_over_many_seeds(self):
        cfg = GenConfig(n_d=2, m_u=1, m_d=1)
        for seed in range(10_000):
            g = generate(cfg.replace(master_seed=seed)).gains
            assert np.all(np.isfinite(g)) and np.all(g > 0)


def test_normalized_gain_mean():
    cfg = GenConfig(n_uc=0, n_dc=0, m_u=1, m_d=1, n_d=300, master_seed=2024)
    sc = generate(cfg)
    pos = sc.positions
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.maximum(np.hypot(diff[..., 0], diff[..., 1]), 1.0)
    off = ~np.eye(len(pos), dtype=bool)
    norm = (sc.gains * dist[None] ** cfg.path_loss_exponent / cfg.path_loss_constant)[:, off]
    assert norm.size >= 100_000
    s = cfg.shadow_sigma_db * math.log(10) / 10
    expected = math.exp(s * s / 2)
    assert norm.mean() == pytest.approx(expected, rel=0.05)
