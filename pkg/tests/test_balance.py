import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from balflow.balance import (
    EnergyLedger,
    PotentialState,
    flip_energy_delta,
    stability_bounds,
    weight_of,
)
from balflow.errors import InputError, InvariantViolation
from balflow.graph import flip_path
from conftest import fresh_state, make_graph, preprocessed
from oracles import boundary_weights, quad_energy


class TestWeightOf:
    def test_zero_gap(self):
        assert weight_of(0.0) == 1.0

    def test_unit_gap(self):
        assert weight_of(1.0) == 0.5

    def test_downhill_is_one(self):
        # weight saturates at 1 whenever the head is not above the tail
        assert weight_of(-5.0) == 1.0

    def test_rejects_nonfinite(self):
        with pytest.raises(InputError):
            weight_of(float("nan"))


class TestStabilityBounds:
    def test_zero_delta(self):
        assert stability_bounds(0.7, 0.0) == (0.7, 0.7)

    def test_half_weight_endpoints(self):
        lo, hi = stability_bounds(0.5, 0.5)
        # gap moves of |x2 - 1| <= 1 allow x2 in {0, 2}: weights 1 and 1/3
        assert lo == pytest.approx(1.0 / 3.0)
        assert hi == pytest.approx(1.0)
        assert lo <= weight_of(2.0) <= hi
        assert lo <= weight_of(0.0) <= hi

    def test_rejects_bad_delta(self):
        with pytest.raises(InputError):
            stability_bounds(0.5, 1.0)

    def test_bulk_random_sandwich(self, rng):
        # vectorised version of the lemma over 10^5 samples
        x1 = rng.uniform(-3.0, 6.0, 100_000)
        delta = rng.uniform(0.0, 0.999, 100_000)
        w1 = 1.0 / (np.maximum(x1, 0.0) + 1.0)
        shift = rng.uniform(-1.0, 1.0, 100_000) * delta / w1
        w2 = 1.0 / (np.maximum(x1 + shift, 0.0) + 1.0)
        assert (w2 >= w1 / (1.0 + delta) - 1e-12).all()
        assert (w2 <= w1 / (1.0 - delta) + 1e-12).all()

    @settings(max_examples=300, deadline=None)
    @given(
        x1=st.floats(-10, 20),
        delta=st.floats(0, 0.999),
        frac=st.floats(-1, 1),
    )
    def test_hypothesis_sandwich(self, x1, delta, frac):
        w1 = weight_of(x1)
        x2 = x1 + frac * delta / w1
        lo, hi = stability_bounds(w1, delta)
        assert lo - 1e-12 <= weight_of(x2) <= hi + 1e-12


class TestGradient:
    def test_single_arc_refresh(self):
        g = make_graph(2, [(0, 1)], t=1)
        state = fresh_state(g, horizon=16.0)
        state.potentials[1] = 1.0
        state.refresh_arc(0)
        assert state.gradient[0] == pytest.approx(0.5)
        assert state.gradient[1] == pytest.approx(-0.5)

    def test_refresh_unchanged_is_noop(self):
        g = make_graph(2, [(0, 1)], t=1)
        state = fresh_state(g)
        before = state.gradient.copy()
        state.refresh_arc(0)
        assert (state.gradient == before).all()

    def test_matches_from_scratch_oracle(self, rng):
        for seed in range(6):
            g = preprocessed(8, 20, seed)
            if g is None:
                continue
            state = fresh_state(g)
            state.potentials[:] = rng.uniform(-2, 2, g.n)
            for arc_id in g.live_arc_ids():
                state.refresh_arc(int(arc_id))
            oracle = np.zeros(g.n)
            for arc_id in g.live_arc_ids():
                a = g.arc(int(arc_id))
                w = weight_of(state.potentials[a.eff_head] - state.potentials[a.eff_tail])
                oracle[a.eff_tail] += w
                oracle[a.eff_head] -= w
            assert np.allclose(state.gradient, oracle, atol=1e-9)
            assert state.gradient_residual() <= 1e-9

    def test_cut_value_identity(self, rng):
        for seed in range(5):
            g = preprocessed(7, 16, seed)
            if g is None:
                continue
            state = fresh_state(g)
            state.potentials[:] = rng.uniform(-1, 1, g.n)
            for arc_id in g.live_arc_ids():
                state.refresh_arc(int(arc_id))
            for _ in range(10):
                size = int(rng.integers(1, g.n))
                members = rng.choice(g.n, size=size, replace=False)
                w_out, w_in = boundary_weights(state, members)
                assert state.gradient_cut_value(members) == pytest.approx(
                    w_out - w_in, abs=1e-9
                )
            assert state.gradient_cut_value(range(g.n)) == pytest.approx(0.0, abs=1e-9)

    def test_gap_negates_on_flip(self):
        g = make_graph(2, [(0, 1)], t=1)
        state = fresh_state(g)
        state.potentials[:] = [0.25, 1.0]
        assert state.potential_gap(0) == pytest.approx(0.75)
        flip_path(g, [0])
        assert state.potential_gap(0) == pytest.approx(-0.75)

    def test_single_arc_cut_value(self):
        g = make_graph(2, [(0, 1)], t=1)
        state = fresh_state(g)
        assert state.gradient_cut_value([0]) == pytest.approx(1.0)

    def test_toggle_moves_crossing_gaps_by_eta(self, rng):
        from balflow.ratio_cut import RatioCut, toggle_cut

        g = preprocessed(7, 16, 4)
        state = fresh_state(g)
        members = (0, 2)
        inside = set(members)
        before = {
            int(i): state.potential_gap(int(i)) for i in g.live_arc_ids()
        }
        rc = RatioCut(members=members, g_val=-1.0, u_val=4.0, ratio=-0.25)
        eta = 0.05
        toggle_cut(state, rc, eta)
        for arc_id, gap0 in before.items():
            a = g.arc(arc_id)
            tail_in = a.eff_tail in inside
            head_in = a.eff_head in inside
            gap1 = state.potential_gap(arc_id)
            if tail_in and not head_in:
                assert gap1 == pytest.approx(gap0 - eta)
            elif head_in and not tail_in:
                assert gap1 == pytest.approx(gap0 + eta)
            else:
                assert gap1 == pytest.approx(gap0)


class TestDrift:
    def test_empty_after_full_refresh(self):
        g = preprocessed(6, 14, 0)
        state = fresh_state(g)
        state.potentials[:] = np.linspace(0, 1, g.n)
        for arc_id in g.live_arc_ids():
            state.refresh_arc(int(arc_id))
        assert state.drifted_arcs().size == 0

    def test_threshold_is_inclusive(self):
        g = make_graph(2, [(0, 1)], t=1)
        state = fresh_state(g)
        state.potentials[1] = state.drift_threshold  # w~ = 1, drift exactly eps
        assert list(state.drifted_arcs()) == [0]
        state.potentials[1] = state.drift_threshold * 0.999
        assert state.drifted_arcs().size == 0

    def test_matches_bruteforce_scan(self, rng):
        g = preprocessed(8, 24, 1)
        state = fresh_state(g)
        state.potentials[:] = rng.uniform(-0.2, 0.2, g.n)
        expected = []
        for arc_id in g.live_arc_ids():
            a = g.arc(int(arc_id))
            gap = state.potentials[a.eff_head] - state.potentials[a.eff_tail]
            drift = state.approx_weight[arc_id] * abs(gap - state.gap_at_refresh[arc_id])
            if drift >= state.drift_threshold:
                expected.append(int(arc_id))
        assert sorted(int(i) for i in state.drifted_arcs()) == sorted(expected)


class TestEnergy:
    def test_closed_forms(self):
        g = make_graph(2, [(0, 1)], t=1)
        state = PotentialState(g, horizon=10.0)
        assert state.arc_energy(0) == pytest.approx(math.log(11.0))
        state.potentials[1] = 10.0
        assert state.arc_energy(0) == pytest.approx(0.0)
        state.potentials[1] = -3.0
        assert state.arc_energy(0) == pytest.approx(math.log(11.0) + 3.0)
        assert state.arc_energy(0) == pytest.approx(5.3979, abs=1e-4)
        state.potentials[1] = 10.5
        with pytest.raises(InvariantViolation):
            state.arc_energy(0)

    def test_initial_total_is_m_log(self):
        g = preprocessed(7, 18, 4)
        state = fresh_state(g, horizon=100.0)
        assert state.total_energy() == pytest.approx(len(g) * math.log(101.0))

    def test_no_arcs_zero_energy(self):
        from balflow.graph import DirectedMultigraph

        g = DirectedMultigraph(2, 0, 1)
        state = PotentialState(g, horizon=16.0)
        assert state.total_energy() == 0.0

    def test_matches_quadrature(self, rng):
        g = make_graph(2, [(0, 1)], t=1)
        state = PotentialState(g, horizon=8.0)
        for gap in rng.uniform(-4.0, 8.0, 12):
            state.potentials[1] = gap
            assert state.arc_energy(0) == pytest.approx(
                quad_energy(float(gap), 8.0), abs=1e-4
            )

    def test_flip_delta_closed_form(self, rng):
        horizon = 50.0
        for gap in rng.uniform(-10, 10, 20):
            gap = float(gap)
            e_before = (
                math.log(horizon + 1) - math.log(gap + 1)
                if gap >= 0
                else math.log(horizon + 1) - gap
            )
            rev = -gap
            e_after = (
                math.log(horizon + 1) - math.log(rev + 1)
                if rev >= 0
                else math.log(horizon + 1) - rev
            )
            delta = flip_energy_delta(gap, horizon)
            assert delta == pytest.approx(e_after - e_before, abs=1e-12)
            # per-arc bound used by the augmentation lemma
            assert delta <= gap + math.log(horizon + 1) + 1e-12

    def test_ledger_additivity(self):
        led = EnergyLedger(total=10.0)
        led.record_toggle(-0.5)
        led.record_augment(2.0, bound=3.0)
        assert led.total == pytest.approx(11.5)
        assert led.toggle_deltas == [-0.5]
        assert led.augment_deltas == [2.0]
        assert [e[0] for e in led.events] == ["toggle", "augment"]


class TestSandwichAudit:
    def test_flagged_when_weight_stale(self):
        g = make_graph(2, [(0, 1)], t=1)
        state = fresh_state(g)
        state.potentials[1] = 5.0  # true weight 1/6, approx stuck at 1
        assert list(state.sandwich_violations()) == [0]
        state.refresh_arc(0)
        assert state.sandwich_violations().size == 0
