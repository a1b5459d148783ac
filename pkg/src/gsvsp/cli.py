"""Command-line front end.

Exit codes: 0 success, 1 synthesis failure, 2 configuration error,
3 simulation divergence, 4 certification failure.
"""

from __future__ import annotations

import dataclasses
import sys
from pathlib import Path

import click

from . import pipeline
from .config import RunConfig, load_config
from .errors import CertificationError, InvalidInputError, SimulationError, SynthesisError
from .scheduling import MODES

EXIT_SYNTHESIS = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_CERTIFICATION = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(config, out, step, horizon) -> tuple[RunConfig, Path]:
    try:
        cfg = load_config(config)
        sim = cfg.sim
        if step is not None or horizon is not None:
            sim = dataclasses.replace(sim, step=step if step is not None else sim.step,
                                      horizon=horizon if horizon is not None else sim.horizon)
            cfg = dataclasses.replace(cfg, sim=sim)
    except InvalidInputError as exc:
        _fail(EXIT_CONFIG, str(exc))
    return cfg, Path(out if out is not None else cfg.output_dir)


def _run_guarded(fn, *args, mode: str | None = None):
    where = f" (mode {mode})" if mode else ""
    try:
        return fn(*args)
    except InvalidInputError as exc:
        _fail(EXIT_CONFIG, f"{exc}{where}")
    except SimulationError as exc:
        _fail(EXIT_DIVERGED, f"{exc}{where}; first bad time {exc.first_bad_time}")
    except CertificationError as exc:
        _fail(EXIT_CERTIFICATION, f"{exc}{where}")
    except SynthesisError as exc:
        _fail(EXIT_SYNTHESIS, f"{exc}{where}")


def common_options(fn):
    fn = click.option("--horizon", type=float, default=None, help="Simulation horizon [s].")(fn)
    fn = click.option("--step", type=float, default=None, help="RK4 step [s].")(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")(fn)
    fn = click.option("--config", type=click.Path(dir_okay=False), default=None, help="JSON config file.")(fn)
    return fn


class _ModeChoice(click.Choice):
    def fail(self, message, param=None, ctx=None):
        click.echo(f"error: {message}", err=True)
        sys.exit(EXIT_CONFIG)


mode_option = click.option("--mode", type=_ModeChoice(MODES), default=None,
                           help="Scheduling mode (defaults to scheduling.mode in the config).")


@click.group()
def main():
    """Gain-scheduled VSP controllers for a two-link arm: synthesis, simulation, audit."""


@main.command()
@common_options
def synthesize(config, out, step, horizon):
    """Synthesize the subcontrollers and write model.json."""
    cfg, out_dir = _load(config, out, step, horizon)
    reals = _run_guarded(pipeline.synthesize, cfg)
    failed = [r.linearization_deg for r in reals if not r.certificate["spr_pass"]]
    pipeline.write_json(out_dir / "model.json", pipeline.model_document(cfg, reals))
    for r in reals:
        c = r.certificate
        click.echo(f"theta2={r.linearization_deg:g} deg  care_res={c['care_residual']:.2e}  "
                   f"lyap_res={c['lyapunov_residual']:.2e}  spr={'pass' if c['spr_pass'] else 'FAIL'}  "
                   f"delta_i={r.indices.delta:.3e}  eps_i={r.indices.epsilon:.3e}")
    if failed:
        _fail(EXIT_CERTIFICATION, f"SPR certificate failed at {failed}")


@main.command()
@common_options
@mode_option
def simulate(config, out, step, horizon, mode):
    """Run one closed-loop simulation and write the log, metrics and figure CSVs."""
    cfg, out_dir = _load(config, out, step, horizon)
    mode = mode or cfg.scheduling.mode
    reals = _run_guarded(pipeline.load_or_synthesize, cfg, out_dir)
    log = _run_guarded(pipeline.simulate, cfg, reals, mode, mode=mode)
    metrics = pipeline.rms_metrics(log)
    pipeline.write_log_artifacts(out_dir, log, metrics)
    e, ed = metrics.rms_e_deg, metrics.rms_edot_degps
    click.echo(f"{mode}: rms e = ({e[0]:.4f}, {e[1]:.4f}) deg, rms edot = ({ed[0]:.4f}, {ed[1]:.4f}) deg/s")


@main.command()
@common_options
def compare(config, out, step, horizon):
    """Run all three modes and write table4.csv."""
    cfg, out_dir = _load(config, out, step, horizon)
    reals = _run_guarded(pipeline.load_or_synthesize, cfg, out_dir)
    rows = {}
    for mode in ("unscheduled", "scalar", "matrix"):
        log = _run_guarded(pipeline.simulate, cfg, reals, mode, mode=mode)
        rows[mode] = pipeline.rms_metrics(log)
        pipeline.write_log_artifacts(out_dir, log, rows[mode])
    text = pipeline.table4_text(rows)
    pipeline.write_atomic(out_dir / "table4.csv", text)
    click.echo(text, nl=False)


@main.command()
@common_options
@mode_option
def audit(config, out, step, horizon, mode):
    """Compose the scheduled passivity indices and check them on a closed-loop run."""
    cfg, out_dir = _load(config, out, step, horizon)
    mode = mode or cfg.scheduling.mode
    reals = _run_guarded(pipeline.load_or_synthesize, cfg, out_dir)
    activity = _run_guarded(pipeline.activity_for, cfg, reals, mode, mode=mode)
    doc = {"mode": mode, "activity": activity.to_dict()}
    if not activity.is_strongly_active:
        doc["error"] = "not strongly active"
        pipeline.write_json(out_dir / f"audit_{mode}.json", doc)
        _fail(EXIT_CERTIFICATION,
              f"scheduling matrices are not strongly active; first failing time t = {activity.first_failing_time():g} s")
    result = _run_guarded(pipeline.audit, cfg, reals, mode, mode=mode)
    doc["indices"] = result.indices.to_dict()
    doc["audit"] = result.report.to_dict()
    if result.scalar_closed_form_delta_hat is not None:
        doc["scalar_closed_form_delta_hat"] = result.scalar_closed_form_delta_hat
    pipeline.write_json(out_dir / f"audit_{mode}.json", doc)
    idx = result.indices
    click.echo(f"{mode}: strongly active, nu_inf={idx.nu_inf:.4g}, sigma_psi_bar={idx.sigma_psi_bar:.4g}, "
               f"delta_hat={idx.delta_hat:.3e}, eps_bar={idx.epsilon_bar:.3e}, "
               f"min margin={result.report.min_margin:.3e} -> {'pass' if result.report.passed else 'FAIL'}")
    if not result.report.passed:
        _fail(EXIT_CERTIFICATION, "passivity inequality violated on the closed-loop run")


if __name__ == "__main__":
    main()
