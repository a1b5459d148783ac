import dataclasses

import numpy as np
import pytest

from gsvsp import pipeline
from gsvsp.dynamics import TRUE_PARAMS, TrajectorySpec, kinetic_energy
from gsvsp.errors import InvalidInputError, SimulationError
from gsvsp.gs_controller import build_controller
from gsvsp.scheduling import GsPassivityIndices
from gsvsp.signals import cumulative_inner_product
from gsvsp.sim import (SimConfig, SimulationLog, passivity_audit, power_balance_residual, rms_metrics,
                       run_closed_loop)

MODES = ("matrix", "scalar", "unscheduled")
HOLD = TrajectorySpec((0.0, 1.0), ((-90.0, 150.0), (-90.0, 150.0)))


def with_sim(cfg, **kw):
    return dataclasses.replace(cfg, sim=dataclasses.replace(cfg.sim, **kw))


@pytest.mark.parametrize("mode", MODES)
def test_equilibrium_hold(realizations, cfg, mode):
    ctrl = build_controller(realizations, mode)
    log = run_closed_loop(SimConfig(horizon=2.0, mode=mode), ctrl, cfg.synthesis.Kp, traj=HOLD)
    for name in ("e", "u", "u_c", "y_c", "qdot"):
        assert not np.any(log.channels[name]), name
    assert np.all(log.channels["q"] == np.deg2rad([-90.0, 150.0]))


def test_log_consistency(logs):
    ch = logs["matrix"].channels
    np.testing.assert_array_equal(ch["e"], ch["theta_d"] - ch["q"])
    np.testing.assert_array_equal(ch["edot"], ch["thetadot_d"] - ch["qdot"])
    np.testing.assert_array_equal(ch["u_c"], ch["edot"])
    np.testing.assert_allclose(ch["u"], ch["e"] @ np.diag([35.0, 35.0]) + ch["y_c"], atol=1e-12)
    assert len(logs["matrix"]) == 8501


def _log(e, edot, step=1e-3):
    return SimulationLog(step, "test", {"q": np.zeros_like(e), "e": e, "edot": edot})


def test_rms_examples():
    z = np.zeros((101, 2))
    assert rms_metrics(_log(z, z)).as_row() == [0.0] * 4
    e = np.zeros((101, 2))
    e[:, 0] = np.deg2rad(1.0)
    assert rms_metrics(_log(e, z)).rms_e_deg[0] == pytest.approx(1.0)
    t = np.arange(4001) * 1e-3
    e = np.column_stack([np.deg2rad(np.sin(2 * np.pi * t)), np.zeros_like(t)])
    assert rms_metrics(_log(e, z)).rms_e_deg[0] == pytest.approx(1 / np.sqrt(2), abs=1e-3)


def test_metrics_json_shape(logs):
    d = rms_metrics(logs["matrix"]).to_dict()
    assert set(d) == {"mode", "rms_e_deg", "rms_edot_degps"}
    assert len(d["rms_e_deg"]) == 2 and len(d["rms_edot_degps"]) == 2


def test_mode_ordering(logs):
    rows = {m: rms_metrics(logs[m]) for m in MODES}
    assert pipeline.ordering_holds(rows) == [True] * 4


def test_audit_matrix_mode(cfg, realizations, logs):
    res = pipeline.audit(cfg, realizations, "matrix", logs["matrix"])
    assert res.activity.is_strongly_active
    assert res.indices.delta_hat > 0 and res.indices.epsilon_bar > 0
    assert len(res.report.horizons) == 50
    assert res.report.passed


def test_audit_falsifiable(cfg, realizations, logs):
    res = pipeline.audit(cfg, realizations, "matrix", logs["matrix"])
    inflated = dataclasses.replace(res.indices, delta_hat=res.indices.delta_hat * 1e8)
    assert not passivity_audit(logs["matrix"], inflated).passed
    inflated = dataclasses.replace(res.indices, epsilon_bar=res.indices.epsilon_bar * 1e8)
    assert not passivity_audit(logs["matrix"], inflated).passed


def test_observed_input_strictness_exceeds_millionfold_bound(cfg, realizations, logs):
    # the certified delta is conservative: a 1e6 inflation still sits below the observed ratio
    log = logs["matrix"]
    res = pipeline.audit(cfg, realizations, "matrix", log)
    uu = cumulative_inner_product(log.signal("u_c"), log.signal("u_c"))
    cross = cumulative_inner_product(log.signal("u_c"), log.signal("y_c"))
    ks = res.report.horizons / log.step
    ks = ks.round().astype(int)
    ks = ks[uu[ks] > 0]
    assert np.min(cross[ks] / uu[ks]) > 0.5 * res.indices.delta_hat * 1e6
    inflated = dataclasses.replace(res.indices, delta_hat=res.indices.delta_hat * 1e6)
    assert passivity_audit(log, inflated).passed


def test_audit_zero_input(realizations, cfg):
    log = run_closed_loop(SimConfig(horizon=1.0), build_controller(realizations, "matrix"),
                          cfg.synthesis.Kp, traj=HOLD)
    idx = GsPassivityIndices(0.0, 1e-4, 1e-5, 0.0, 1e-3, 1e-6, 0.1, 2.0, 2.0)
    rep = passivity_audit(log, idx)
    assert np.all(rep.margins == 0.0) and rep.passed


def test_audit_missing_channel():
    log = SimulationLog(1e-3, "x", {"q": np.zeros((10, 2)), "u_c": np.zeros((10, 2))})
    idx = GsPassivityIndices(0.0, 1e-4, 1e-5, 0.0, 1e-3, 1e-6, 0.1, 2.0, 2.0)
    with pytest.raises(InvalidInputError):
        passivity_audit(log, idx)


def test_scalar_closed_form(cfg, realizations, logs):
    res = pipeline.audit(cfg, realizations, "scalar", logs["scalar"])
    assert abs(res.indices.delta_hat - res.scalar_closed_form_delta_hat) <= 1e-12
    assert res.report.passed


@pytest.mark.parametrize("mode", MODES)
def test_plant_passivity(logs, mode):
    log = logs[mode]
    supplied = cumulative_inner_product(log.signal("u"), log.signal("qdot"))
    ke0 = kinetic_energy(log.channels["q"][0], log.channels["qdot"][0], TRUE_PARAMS)
    assert supplied.min() >= -ke0 - 1e-9


@pytest.mark.parametrize("mode", MODES)
def test_power_balance(logs, mode):
    _, err = power_balance_residual(logs[mode])
    assert err.max() <= 1e-5


@pytest.mark.slow
def test_rk4_order(cfg, realizations):
    finals = []
    for h in (2e-3, 1e-3, 5e-4):
        log = pipeline.simulate(with_sim(cfg, step=h, horizon=1.0), realizations, "matrix")
        finals.append(np.r_[log.channels["q"][-1], log.channels["qdot"][-1]])
    d1 = np.linalg.norm(finals[0] - finals[1])
    d2 = np.linalg.norm(finals[1] - finals[2])
    assert np.log2(d1 / d2) >= 3.5


@pytest.mark.slow
def test_step_halving_samples(cfg, realizations, logs):
    fine = pipeline.simulate(with_sim(cfg, step=5e-4), realizations, "matrix")
    coarse = logs["matrix"]
    assert np.max(np.abs(fine.channels["q"][::2] - coarse.channels["q"])) < 1e-6


def test_determinism(cfg, realizations, logs):
    again = pipeline.simulate(cfg, realizations, "scalar")
    for k, v in logs["scalar"].channels.items():
        assert np.array_equal(v, again.channels[k]), k


def test_divergence_reported(realizations, cfg):
    ctrl = build_controller(realizations, "matrix")
    with pytest.raises(SimulationError) as info:
        run_closed_loop(SimConfig(step=0.05, horizon=8.5), ctrl, cfg.synthesis.Kp)
    assert info.value.first_bad_time > 0


def test_sim_config_validation():
    with pytest.raises(InvalidInputError):
        SimConfig(step=0.0)
    with pytest.raises(InvalidInputError):
        SimConfig(step=1e-2, horizon=1e-3)
    with pytest.raises(InvalidInputError):
        SimConfig(controller_input="sideways")
