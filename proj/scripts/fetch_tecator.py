#!/usr/bin/env python3
"""Fetch the Tecator meat spectra into data/tecator.csv.

Columns: spectrum:1 .. spectrum:100 (absorbance curve), fat.
Rows keep the original order, so rows 1-172 / 173-215 give the usual split.
"""
import argparse
import lzma
import pathlib
import pickle
import subprocess
import sys
import tempfile
import zipfile

MEMBER = "rdatasets/_data/modeldata/meats.pkl.compress"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=pathlib.Path(__file__).resolve().parent.parent / "data" / "tecator.csv",
                    type=pathlib.Path)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", tmp, "rdatasets==0.2.10"],
                       check=True)
        wheel = next(pathlib.Path(tmp).glob("rdatasets-*.whl"))
        with zipfile.ZipFile(wheel) as z:
            frame = pickle.loads(lzma.decompress(z.read(MEMBER)))

    spectra = [c for c in frame.columns if c.startswith("x_")]
    if len(spectra) != 100 or len(frame) != 215:
        print(f"unexpected shape {frame.shape}", file=sys.stderr)
        return 1
    out = frame[spectra + ["fat"]].copy()
    out.columns = [f"spectrum:{int(c[2:])}" for c in spectra] + ["fat"]
    args.out.parent.mkdir(parents=True, exist_ok=True)
    out.to_csv(args.out, index=False, float_format="%.17g")
    print(f"wrote {args.out} ({len(out)} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
