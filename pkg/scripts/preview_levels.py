#!/usr/bin/env python3
"""Generate the three difficulty presets and dump stats plus PGM previews."""

import argparse
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from skitrain.terrain import difficulty_preset, generate_level, heightmap_to_pgm, save_level


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="out/levels")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for lvl in (1, 2, 3):
        level = generate_level(difficulty_preset(lvl, seed=args.seed))
        save_level(out / f"level_{lvl}.json", level)
        (out / f"level_{lvl}.pgm").write_bytes(heightmap_to_pgm(level.heightmap))
        radii = [a.radius for a in level.track.arcs]
        print(f"level {lvl}: {level.track.total_length:6.1f} m, "
              f"{len(level.track.arcs)} arcs (r {min(radii):.1f}-{max(radii):.1f} m), "
              f"slope {math.degrees(level.params.base_slope):.0f} deg, "
              f"{len(level.props.cubes)} cubes, "
              f"grid {level.heightmap.rows}x{level.heightmap.cols}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
