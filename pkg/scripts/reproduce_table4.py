"""Run the three controllers and print RMS errors next to the published reference values.

usage: python3 scripts/reproduce_table4.py [--config cfg.json] [--out out]
"""

import argparse
from pathlib import Path

from gsvsp import pipeline
from gsvsp.config import load_config

REFERENCE = {
    "unscheduled": (0.8328, 0.6688, 2.5933, 1.5587),
    "scalar": (0.6839, 0.6464, 2.1307, 1.2702),
    "matrix": (0.0668, 0.4515, 0.1480, 1.1352),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=None)
    ap.add_argument("--out", default="out")
    args = ap.parse_args()
    cfg = load_config(args.config)
    out = Path(args.out)
    reals = pipeline.load_or_synthesize(cfg, out)
    rows = {}
    print(f"{'mode':12s} {'col':6s} {'ours':>9s} {'ref':>9s} {'rel':>8s}")
    for mode in ("unscheduled", "scalar", "matrix"):
        log = pipeline.simulate(cfg, reals, mode)
        rows[mode] = pipeline.rms_metrics(log)
        pipeline.write_log_artifacts(out, log, rows[mode])
        for col, got, ref in zip(pipeline.COLUMNS, rows[mode].as_row(), REFERENCE[mode]):
            print(f"{mode:12s} {col:6s} {got:9.4f} {ref:9.4f} {got / ref - 1:+8.1%}")
    text = pipeline.table4_text(rows)
    pipeline.write_atomic(out / "table4.csv", text)
    print(text.splitlines()[-1])


if __name__ == "__main__":
    main()
