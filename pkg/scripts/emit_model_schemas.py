#!/usr/bin/env python3
"""Emit the model of a Unit pair type at each legal flag state.

Writes model_sigma_00.txt, model_sigma_10.txt and model_sigma_11.txt to
the given directory (default tests/golden)."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from dtalloc.model import emit_model  # noqa: E402
from dtalloc.syntax import Sigma, UNIT_TY  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument(
        "out",
        nargs="?",
        default=str(Path(__file__).resolve().parent.parent / "tests" / "golden"),
    )
    args = ap.parse_args()
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for f1, f2 in [(0, 0), (1, 0), (1, 1)]:
        ty = Sigma("x", UNIT_TY, f1, UNIT_TY, f2)
        path = outdir / f"model_sigma_{f1}{f2}.txt"
        path.write_text(emit_model(ty))
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
