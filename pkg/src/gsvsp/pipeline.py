"""End-to-end steps shared by the CLI and the experiment scripts."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import signals
from .config import RunConfig
from .errors import InvalidInputError
from .gs_controller import GsController, build_controller
from .scheduling import (MODES, ActivityReport, GsPassivityIndices, classify_activity, compose_indices,
                         eval_scalar_signals, uniform_grid)
from .sim import AuditReport, Metrics, SimConfig, SimulationLog, passivity_audit, rms_metrics, run_closed_loop
from .synthesis import SubcontrollerRealization, synthesize_all

COLUMNS = ("e1", "e2", "edot1", "edot2")


def check_mode(mode: str) -> str:
    if mode not in MODES:
        raise InvalidInputError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    return mode


def synthesize(cfg: RunConfig) -> list[SubcontrollerRealization]:
    return synthesize_all(cfg.synthesis, cfg.robot.measured_params())


def controller_for(cfg: RunConfig, realizations, mode: str) -> GsController:
    return build_controller(realizations, check_mode(mode), blackout=cfg.scheduling.blackout,
                            **cfg.scheduling.schedule_kwargs())


def simulate(cfg: RunConfig, realizations, mode: str) -> SimulationLog:
    ctrl = controller_for(cfg, realizations, mode)
    sim_cfg = SimConfig(step=cfg.sim.step, horizon=cfg.sim.horizon, mode=mode, gravity=cfg.robot.gravity,
                        controller_input=cfg.sim.controller_input)
    return run_closed_loop(sim_cfg, ctrl, cfg.synthesis.Kp, cfg.robot.true_params(), cfg.trajectory)


@dataclass
class AuditResult:
    activity: ActivityReport
    indices: GsPassivityIndices
    report: AuditReport
    scalar_closed_form_delta_hat: float | None = None


def activity_for(cfg: RunConfig, realizations, mode: str) -> ActivityReport:
    ctrl = controller_for(cfg, realizations, mode)
    grid = uniform_grid(cfg.sim.horizon, cfg.scheduling.grid_step)
    return classify_activity(ctrl.schedule, grid)


def audit(cfg: RunConfig, realizations, mode: str, log: SimulationLog | None = None) -> AuditResult:
    """Compose the scheduled indices and check them on a closed-loop run.

    Raises :class:`CertificationError` if the schedule is not strongly active.
    """
    ctrl = controller_for(cfg, realizations, mode)
    grid = uniform_grid(cfg.sim.horizon, cfg.scheduling.grid_step)
    activity = classify_activity(ctrl.schedule, grid)
    idx = compose_indices([r.indices for r in ctrl.realizations], activity, ctrl.schedule.alphas)
    log = log if log is not None else simulate(cfg, realizations, mode)
    result = AuditResult(activity, idx, passivity_audit(log, idx))
    if mode == "scalar":
        s_sq = [sum(s * s for s in eval_scalar_signals(float(t)) if s != 0.0) for t in grid]
        result.scalar_closed_form_delta_hat = min(r.indices.delta for r in ctrl.realizations) * min(s_sq)
    return result


# -- artifact writing --------------------------------------------------------


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj) -> None:
    write_atomic(path, json.dumps(obj, indent=2) + "\n")


def write_csv_atomic(path, step: float, channels: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    os.close(fd)
    try:
        signals.write_csv(tmp, step, channels)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def model_document(cfg: RunConfig, realizations) -> dict:
    return {
        "synthesis": cfg.to_dict()["synthesis"],
        "measured": cfg.to_dict()["robot"]["measured"],
        "linearization_deg": [r.linearization_deg for r in realizations],
        "realizations": [r.to_dict() for r in realizations],
    }


def load_or_synthesize(cfg: RunConfig, out_dir: Path) -> list[SubcontrollerRealization]:
    """Reuse ``model.json`` when it was built from the same synthesis settings, else rebuild it."""
    path = out_dir / "model.json"
    if path.exists():
        doc = json.loads(path.read_text())
        current = cfg.to_dict()
        if doc.get("synthesis") == current["synthesis"] and doc.get("measured") == current["robot"]["measured"]:
            return [SubcontrollerRealization.from_dict(d) for d in doc["realizations"]]
    reals = synthesize(cfg)
    write_json(path, model_document(cfg, reals))
    return reals


def write_log_artifacts(out_dir: Path, log: SimulationLog, metrics: Metrics) -> None:
    mode = log.mode
    ch = log.channels
    write_csv_atomic(out_dir / f"log_{mode}.csv", log.step, ch)
    deg = np.rad2deg
    write_csv_atomic(out_dir / f"fig3_{mode}.csv", log.step, {
        "theta_d_deg": deg(ch["theta_d"]), "q_deg": deg(ch["q"]),
        "thetadot_d_degps": deg(ch["thetadot_d"]), "qdot_degps": deg(ch["qdot"]),
    })
    write_csv_atomic(out_dir / f"fig4_{mode}.csv", log.step, {
        "e_deg": deg(ch["e"]), "edot_degps": deg(ch["edot"]),
    })
    write_csv_atomic(out_dir / f"fig5_{mode}.csv", log.step, {"tau": ch["u"]})
    write_json(out_dir / f"metrics_{mode}.json", metrics.to_dict())


def ordering_holds(rows: dict[str, Metrics]) -> list[bool]:
    """Per column: matrix < scalar < unscheduled."""
    m, s, u = (np.array(rows[k].as_row()) for k in ("matrix", "scalar", "unscheduled"))
    return [bool(a < b < c) for a, b, c in zip(m, s, u)]


def table4_text(rows: dict[str, Metrics]) -> str:
    lines = ["mode," + ",".join(COLUMNS)]
    for mode in ("unscheduled", "scalar", "matrix"):
        lines.append(mode + "," + ",".join(f"{v:.6f}" for v in rows[mode].as_row()))
    order = ordering_holds(rows)
    verdict = "PASS" if all(order) else "FAIL"
    detail = " ".join(f"{c}={'ok' if ok else 'violated'}" for c, ok in zip(COLUMNS, order))
    lines.append(f"# ordering matrix < scalar < unscheduled: {verdict} ({detail})")
    return "\n".join(lines) + "\n"
