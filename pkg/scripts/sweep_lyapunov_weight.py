"""Sweep the Lyapunov weight used in the KYP step and report RMS errors per mode.

The weight is not pinned down by the design data, so this shows how strongly
the tracking errors depend on it. Each row lists the four RMS columns for the
three modes and whether matrix < scalar < unscheduled holds column-wise.

usage: python3 scripts/sweep_lyapunov_weight.py [--scales 0.01 0.1 1] [--horizon 8.5]
"""

import argparse
import dataclasses

from gsvsp import pipeline
from gsvsp.config import RunConfig
from gsvsp.errors import GsvspError


def run(cfg):
    reals = pipeline.synthesize(cfg)
    return {m: pipeline.rms_metrics(pipeline.simulate(cfg, reals, m)) for m in ("unscheduled", "scalar", "matrix")}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scales", type=float, nargs="+", default=[0.01, 0.1, 0.3, 1.0, 3.0])
    ap.add_argument("--horizon", type=float, default=8.5)
    ap.add_argument("--riccati", action="store_true", help="also try the Riccati-derived weight")
    args = ap.parse_args()
    base = RunConfig()
    base = dataclasses.replace(base, sim=dataclasses.replace(base.sim, horizon=args.horizon))
    variants = [("identity", s) for s in args.scales]
    if args.riccati:
        variants.append(("riccati", 1.0))
    for kind, scale in variants:
        syn = dataclasses.replace(base.synthesis, lyapunov_weight=kind, lyapunov_scale=scale)
        try:
            rows = run(dataclasses.replace(base, synthesis=syn))
        except GsvspError as exc:
            print(f"{kind:8s} x{scale:<6g} failed: {exc}")
            continue
        cells = " | ".join(f"{m[:5]} " + " ".join(f"{v:6.3f}" for v in rows[m].as_row()) for m in rows)
        order = "ok" if all(pipeline.ordering_holds(rows)) else "broken"
        print(f"{kind:8s} x{scale:<6g} {cells} | order {order}")


if __name__ == "__main__":
    main()
