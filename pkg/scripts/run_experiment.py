#!/usr/bin/env python3
"""Run the full synthetic experiment and print the headline numbers.

Equivalent to `skitrain pipeline` but handy to tweak in place when
exploring parameter changes.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from skitrain.pipeline import PipelineConfig, run_synthetic_pipeline


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="out/experiment")
    ap.add_argument("--subjects", type=int, default=10)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--aggressiveness", type=float, default=0.7)
    args = ap.parse_args()

    config = PipelineConfig(subjects=args.subjects, master_seed=args.seed,
                            aggressiveness=args.aggressiveness)
    analysis = run_synthetic_pipeline(args.out_dir, config)

    print(f"wrote {args.out_dir}")
    for lvl_key in sorted(analysis["angleMovement"], key=int):
        sag = analysis["angleMovement"][lvl_key]["sagittal_plane"]
        print(f"  level {lvl_key}: max sagittal {sag['mean']:.1f} +/- {sag['std']:.1f} deg")
    for key in sorted(analysis["headDistance"]):
        agg = analysis["headDistance"][key]
        if agg:
            print(f"  head travel {key}: {agg['mean']:.2f} +/- {agg['std']:.2f} m")
    cell = analysis["correlation"]["x:sagittal_plane"]
    print(f"  corr(x, sagittal): |r|={cell['meanAbsR']:.3f} [{cell['category']}]")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
