"""Run every experiment config in scripts/configs and print the assertion table.

    python scripts/run_corpus.py [--out-dir out] [--threads 4] [config.ini ...]

Exit status is 0 only if every declared assertion of every config passes.
"""

import argparse
import sys
from pathlib import Path

from lidskii_lab.evolution import ExperimentError, load_config, run_experiment

HERE = Path(__file__).resolve().parent


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("configs", nargs="*", help="config files (default: scripts/configs/*.ini)")
    ap.add_argument("--out-dir", default="out")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    paths = [Path(p) for p in args.configs] or sorted((HERE / "configs").glob("*.ini"))
    ok = True
    for path in paths:
        cfg = load_config(path)
        out = Path(args.out_dir) / cfg.name
        try:
            env = run_experiment(cfg, out, threads=args.threads)
        except ExperimentError as exc:
            print(f"{cfg.name}: FAILED in stage {exc.stage}: {exc}")
            ok = False
            continue
        for key, m in sorted(env.margins.items()):
            print(f"{cfg.name:>18} {key:<34} {'PASS' if m['passed'] else 'FAIL'}  value={m['value']:.3g}")
        ok = ok and env.passed
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
