"""PHY timing and loss-assignment tests."""

import pytest

from mvgmp.channel import (
    DEFAULT_RATES_MBPS,
    LossModel,
    PhyConfig,
    assign_user_loss,
    plan_airtime,
    sigmoid_loss,
    tx_duration,
)
from mvgmp.model import TransmissionPlan


class TestTxDuration:
    def test_exact_division(self):
        phy = PhyConfig(rates_mbps=(8.0, 16.0, 32.0, 64.0, 96.0, 128.0, 160.0, 192.0))
        # 64 kbit at 64 Mbit/s with 1 microsecond units: exactly 1000 units
        assert tx_duration(phy, 3) == 1000

    def test_lowest_mcs_rounds_up(self):
        phy = PhyConfig()
        assert tx_duration(phy, 0) == 4741  # ceil(64000 / 13.5)

    def test_linearity_in_view_size(self):
        base = PhyConfig()
        double = PhyConfig(view_size_bits=2 * base.view_size_bits)
        for r in range(8):
            assert abs(tx_duration(double, r) - 2 * tx_duration(base, r)) <= 1

    def test_rate_index_bounds(self):
        phy = PhyConfig()
        with pytest.raises(ValueError):
            tx_duration(phy, 8)
        with pytest.raises(ValueError):
            tx_duration(phy, -1)

    def test_overhead_added_per_broadcast(self):
        plain = PhyConfig()
        padded = PhyConfig(per_broadcast_overhead_units=20)
        assert tx_duration(padded, 7) == tx_duration(plain, 7) + 20


class TestPhyConfig:
    def test_default_ladder_matches_40mhz_mcs(self):
        assert PhyConfig().rates_mbps == DEFAULT_RATES_MBPS
        assert len(DEFAULT_RATES_MBPS) == 8

    def test_rates_must_increase(self):
        with pytest.raises(ValueError):
            PhyConfig(rates_mbps=(13.5, 13.5, 40.5, 54.0, 81.0, 108.0, 121.5, 135.0))

    def test_rate_count_fixed(self):
        with pytest.raises(ValueError):
            PhyConfig(rates_mbps=(1.0, 2.0))


class TestPlanAirtime:
    def test_total_and_makespan(self):
        phy = PhyConfig()
        plan = TransmissionPlan({(1, 0, 7): 2, (2, 1, 7): 1})
        acct = plan_airtime(plan, phy)
        d = tx_duration(phy, 7)
        assert acct["total"] == 3 * d
        assert acct["per_channel"] == {0: 2 * d, 1: d}
        assert acct["makespan"] == 2 * d

    def test_empty_plan(self):
        acct = plan_airtime(TransmissionPlan({}), PhyConfig())
        assert acct["total"] == 0 and acct["makespan"] == 0


class TestLossAssignment:
    def test_explicit_matrix_passthrough(self):
        phy = PhyConfig(num_channels=1)
        row = {(0, r): 0.05 * (r + 1) for r in range(8)}
        model = LossModel.explicit({"u1": row})
        state = assign_user_loss(model, "u1", phy, seed=0)
        assert dict(state.loss) == row

    def test_explicit_matrix_missing_user(self):
        model = LossModel.explicit({"u1": {}})
        with pytest.raises(ValueError):
            assign_user_loss(model, "nobody", PhyConfig(), seed=0)

    def test_explicit_matrix_wrong_dimensions(self):
        phy = PhyConfig(num_channels=2)
        model = LossModel.explicit({"u1": {(0, 0): 0.1}})
        with pytest.raises(ValueError):
            assign_user_loss(model, "u1", phy, seed=0)

    def test_sigmoid_deterministic_per_seed_and_user(self):
        phy = PhyConfig()
        model = LossModel()
        a = assign_user_loss(model, 7, phy, seed=42)
        b = assign_user_loss(model, 7, phy, seed=42)
        c = assign_user_loss(model, 8, phy, seed=42)
        d = assign_user_loss(model, 7, phy, seed=43)
        assert a == b
        assert a.loss != c.loss
        assert a.loss != d.loss

    def test_sigmoid_monotone_in_rate_index(self):
        phy = PhyConfig()
        model = LossModel()
        for uid in range(30):
            state = assign_user_loss(model, uid, phy, seed=5)
            for ch in range(phy.num_channels):
                ladder = [state.loss[(ch, r)] for r in range(8)]
                assert all(a <= b + 1e-12 for a, b in zip(ladder, ladder[1:]))

    def test_sigmoid_floor_at_cell_center(self):
        model = LossModel()
        near = sigmoid_loss(model, 0.0, 0, 8)
        far = sigmoid_loss(model, model.cell_radius_m, 0, 8)
        assert near < far
        assert near < 0.01

    def test_model_validation(self):
        with pytest.raises(ValueError):
            LossModel(kind="nonsense")
        with pytest.raises(ValueError):
            LossModel(kind="explicit-matrix")
        with pytest.raises(ValueError):
            LossModel(d50_slowest_m=10.0, d50_fastest_m=20.0)
