import json

import numpy as np

import zonoreach.estimator as est
import zonoreach.harness as hn
import zonoreach.sets as zs
from zonoreach.reach_ltv import LtvReachConfig, ReachResult, reach_ltv
from zonoreach.validation import (
    ValidationReport,
    conservatism_metric,
    ls_reach_ltv,
    validate_reach,
)


def toy_plant():
    return hn.PlantSpec(
        kind="ltv",
        noise_set=zs.Zonotope(np.zeros(2), 0.01 * np.eye(2)),
        a0=np.array([[0.8, 0.1], [0.0, 0.9]]),
        b0=np.array([[1.0], [0.5]]),
    )


def huge_box(n, half_width):
    return zs.Zonotope(np.zeros(n), half_width * np.eye(n))


# ---------------------------------------------------------------------------
# validate_reach
# ---------------------------------------------------------------------------

def test_whole_space_boxes_give_zero_violations():
    plant = toy_plant()
    X0 = zs.Zonotope([1.0, -1.0], 0.1 * np.eye(2))
    U = zs.Zonotope([0.0], [[1.0]])
    sets = [X0] + [huge_box(2, 1e6) for _ in range(4)]
    report = validate_reach(
        ReachResult(sets=sets), plant, X0, [U] * 4, 20, np.random.default_rng(0), seed=0
    )
    assert report.violations == []
    assert report.containment_checks == 20 * 5
    assert report.ok


def test_singleton_sets_violate_every_check():
    plant = toy_plant()
    X0 = zs.Zonotope([1.0, -1.0], 0.1 * np.eye(2))
    U = zs.Zonotope([0.0], [[1.0]])
    sets = [X0] + [zs.Zonotope([100.0, 100.0]) for _ in range(3)]
    report = validate_reach(
        ReachResult(sets=sets), plant, X0, [U] * 3, 10, np.random.default_rng(1), seed=1
    )
    # steps 1..3 all fail; step 0 passes since x0 is drawn from X0
    assert len(report.violations) == 30
    assert all(v["step"] >= 1 for v in report.violations)
    assert not report.ok


def test_report_records_seed_and_radii():
    plant = toy_plant()
    X0 = zs.Zonotope([0.0, 0.0], 0.1 * np.eye(2))
    U = zs.Zonotope([0.0], [[1.0]])
    sets = [X0, huge_box(2, 10.0)]
    report = validate_reach(
        ReachResult(sets=sets), plant, X0, [U], 5, np.random.default_rng(2), seed=42
    )
    assert report.seed == 42
    assert report.per_step_set_radius == conservatism_metric(sets)


def test_report_json_roundtrip():
    report = ValidationReport(
        trajectories_sampled=3,
        containment_checks=12,
        violations=[{"trajectory": 1, "step": 2, "state": [0.1, 0.2]}],
        per_step_set_radius=[0.0, 1.0],
        baseline_radius_delta=[0.0, 0.5],
        seed=9,
    )
    back = ValidationReport.from_dict(json.loads(json.dumps(report.to_dict())))
    assert back.to_dict() == report.to_dict()


def test_baseline_delta_attached():
    plant = toy_plant()
    X0 = zs.Zonotope([0.0, 0.0], 0.1 * np.eye(2))
    U = zs.Zonotope([0.0], [[1.0]])
    tight = ReachResult(sets=[X0, huge_box(2, 1.0)])
    wide = ReachResult(sets=[X0, huge_box(2, 2.0)])
    report = validate_reach(
        tight, plant, X0, [U], 5, np.random.default_rng(3), seed=3, baseline=wide
    )
    assert report.baseline_radius_delta == [0.0, 2.0]


# ---------------------------------------------------------------------------
# conservatism metric
# ---------------------------------------------------------------------------

def test_metric_singleton_and_unit_box():
    assert conservatism_metric([zs.Zonotope([3.0, 4.0])]) == [0.0]
    assert conservatism_metric([zs.Zonotope(np.zeros(2), np.eye(2))]) == [2.0]


def test_metric_monotone_under_minkowski():
    rng = np.random.default_rng(4)
    for _ in range(20):
        Z = zs.Zonotope(rng.normal(size=3), rng.normal(size=(3, 4)))
        W = zs.Zonotope(rng.normal(size=3), rng.normal(size=(3, 2)))
        (m_z,) = conservatism_metric([Z])
        (m_zw,) = conservatism_metric([zs.minkowski_sum(Z, W)])
        assert m_zw >= m_z - 1e-12


# ---------------------------------------------------------------------------
# end-to-end and determinism
# ---------------------------------------------------------------------------

def _small_ltv_scenario(seed):
    plant = hn.ltv_example_plant()
    rng = np.random.default_rng(seed)
    inputs = np.array([[10.0 + 2.25 * rng.uniform(-1, 1)] for _ in range(45)])
    traj = hn.simulate(plant, np.ones(5), inputs, rng)
    state = est.default_init(6, 5, sigma_v=0.005, sigma_theta=0.0, lam=1.0, tau=1e7)
    w = hn.SlidingWindow.empty(30, 5, 1)
    for x, u, xn in traj.transitions():
        state = est.update(state, est.ltv_regressor(x, u), est.output_row(xn))
        w = w.push(x, u, xn)
    X0 = zs.Zonotope(np.ones(5), 0.1 * np.eye(5))
    U = zs.Zonotope([10.0], [[2.25]])
    cfg = LtvReachConfig(
        horizon=5, sigma_ab=0.0, input_sets=[U] * 5,
        noise_set=plant.noise_set, initial_set=X0,
    )
    return plant, X0, U, reach_ltv(state, w, cfg), w, cfg


def test_example_scenario_end_to_end_zero_violations():
    plant, X0, U, result, _, _ = _small_ltv_scenario(5)
    report = validate_reach(result, plant, X0, [U] * 5, 25, np.random.default_rng(6), seed=6)
    assert report.violations == []


def test_same_seed_reports_identical():
    plant, X0, U, result, _, _ = _small_ltv_scenario(7)
    r1 = validate_reach(result, plant, X0, [U] * 5, 15, np.random.default_rng(8), seed=8)
    r2 = validate_reach(result, plant, X0, [U] * 5, 15, np.random.default_rng(8), seed=8)
    assert json.dumps(r1.to_dict(), sort_keys=True) == json.dumps(r2.to_dict(), sort_keys=True)


def test_ls_baseline_pipeline_shapes():
    plant, X0, U, result, w, cfg = _small_ltv_scenario(9)
    base = ls_reach_ltv(w, cfg)
    assert len(base.sets) == len(result.sets)
    assert base.sets[0] is cfg.initial_set
    assert base.diagnostics["mode"] == "ltv-batch-ls"
