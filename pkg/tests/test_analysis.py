import numpy as np
import pytest

from relay_truth.analysis import (
    PROPERTIES,
    PropertyVerdict,
    best_response_scan,
    check_property,
    make_grid,
    truth_vs_k_scan,
)
from relay_truth.channels import DirectLink, db_to_linear
from relay_truth.mechanisms import GameSpec, MechanismError
from relay_truth.priors import McConfig
from relay_truth.selection import ReportVector

REF_RATES = (1.0132, 0.6091, 0.3885, 1.3210)
REF_SPEC = GameSpec(n=4, k=2, true_rates=REF_RATES)
CFG = McConfig(samples=10**6, seed=2011)


def test_make_grid_endpoints_and_step():
    g = make_grid(0.0, 3.0, 0.01)
    assert g[0] == 0.0 and g[-1] == 3.0 and g.size == 301
    assert np.allclose(np.diff(g), 0.01)


class TestBestResponse:
    def test_agv_argmax_near_truth(self):
        arg, curve = best_response_scan(REF_SPEC, "agv", 1, make_grid(), CFG)
        assert abs(arg - 1.0132) <= 0.01 + 1e-9
        assert set(curve) == {"report", "payoff", "transfer", "se_payoff", "se_transfer"}

    def test_baseline_argmax_is_grid_max(self):
        # over-reporting is free without transfers, so exaggerate maximally
        arg, _ = best_response_scan(REF_SPEC, "baseline", 2, make_grid(), CFG)
        assert arg == 3.0

    def test_zero_true_rate_argmax_zero(self):
        spec = GameSpec(n=3, k=1, true_rates=(0.0, 1.0, 1.0))
        arg, _ = best_response_scan(spec, "agv", 1, make_grid(), CFG)
        assert arg == 0.0

    def test_vcg_realized_curve_is_exact(self):
        arg, curve = best_response_scan(
            REF_SPEC, "vcg-realized", 4, make_grid(0.0, 3.0, 0.1), CFG
        )
        assert np.all(curve["se_payoff"] == 0.0)
        # truthful payoff is attained somewhere on the plateau
        assert curve["payoff"].max() == pytest.approx(1.3210 - 0.6091)

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            best_response_scan(REF_SPEC, "agv", 1, [1.0, 1.0], CFG)
        with pytest.raises(ValueError):
            best_response_scan(REF_SPEC, "agv", 1, [], CFG)


class TestTruthVsK:
    def test_k_one_lowest_then_flattens(self):
        grid = make_grid(0.0, 3.0, 0.05)
        curves = truth_vs_k_scan(REF_SPEC, 1, 1.0132, [1, 2, 3], CFG, grid=grid)
        at_truth = {
            k: c["payoff"][np.searchsorted(grid, 1.0)] for k, c in curves.items()
        }
        assert at_truth[1] < at_truth[2]
        # adding a third slot changes little once the strong relays are in
        assert abs(at_truth[3] - at_truth[2]) < at_truth[2] - at_truth[1]

    def test_k_out_of_range(self):
        with pytest.raises(MechanismError):
            truth_vs_k_scan(REF_SPEC, 1, 1.0, [5], CFG)


class TestCheckProperty:
    def test_agv_ic_ir_bb_hold(self):
        for prop in ("IC", "IR", "BB"):
            v = check_property(REF_SPEC, "agv", prop, CFG)
            assert v.holds, (prop, v.witness)
            assert v.witness is None

    def test_vcg_expected_ic_holds(self):
        v = check_property(REF_SPEC, "vcg-expected", "IC", CFG)
        assert v.holds

    def test_vcg_realized_ic_ir_hold(self):
        assert check_property(REF_SPEC, "vcg-realized", "IC", CFG).holds
        assert check_property(REF_SPEC, "vcg-realized", "IR", CFG).holds

    def test_vcg_realized_bb_fails_with_witness(self):
        v = check_property(
            REF_SPEC, "vcg-realized", "BB", CFG,
            reports=ReportVector(reports=REF_RATES),
        )
        assert not v.holds
        assert v.margin == pytest.approx(-1.2182)
        assert v.witness["total"] == pytest.approx(-1.2182)

    def test_baseline_monotone_holds(self):
        v = check_property(REF_SPEC, "baseline", "Prop1-monotone", CFG)
        assert v.holds

    def test_prop8_argmax(self):
        direct = DirectLink(db_to_linear(9.64), db_to_linear(5.47))
        pairs = [(db_to_linear(d), db_to_linear(e)) for d, e in
                 [(6.1734, 3.77), (7.9489, 0.9927), (9.7429, 5.6543)]]
        rv = ReportVector.from_snr_pairs(pairs)
        v = check_property(REF_SPEC, None, "Prop8-argmax", CFG,
                           reports=rv, direct=direct)
        assert v.holds and v.mechanism is None

    def test_prop8_requires_pairs_and_direct(self):
        with pytest.raises(MechanismError):
            check_property(REF_SPEC, None, "Prop8-argmax", CFG)

    def test_inapplicable_pairs_raise(self):
        for mech, prop in [("baseline", "IC"), ("vcg-expected", "BB"),
                           ("vcg-realized", "Prop1-monotone"), ("agv", "Prop1-monotone")]:
            with pytest.raises(MechanismError):
                check_property(REF_SPEC, mech, prop, CFG)
        with pytest.raises(ValueError):
            check_property(REF_SPEC, "agv", "fairness", CFG)

    def test_verdicts_reproducible(self):
        a = check_property(REF_SPEC, "agv", "IC", CFG)
        b = check_property(REF_SPEC, "agv", "IC", CFG)
        assert a.to_dict() == b.to_dict()

    def test_to_dict_is_json_safe(self):
        import json

        v = check_property(REF_SPEC, "agv", "BB", CFG)
        d = v.to_dict()
        json.dumps(d)
        assert isinstance(d["holds"], bool) and isinstance(d["margin"], float)


def test_property_names_are_stable():
    assert PROPERTIES == ("IC", "IR", "BB", "Prop1-monotone", "Prop8-argmax")
    v = PropertyVerdict(property="IC", mechanism="agv", holds=True, margin=0.0)
    assert v.to_dict()["witness"] is None
