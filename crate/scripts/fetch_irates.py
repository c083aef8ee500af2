#!/usr/bin/env python3
"""Extract the monthly U.S. short rate series (Ecdat::Irates, column r1)
for 1964-06 .. 1989-12 (307 observations) into data/irates_1964_1989.csv.

The Ecdat data ships inside the `rdatasets` wheel on PyPI:

    pip download rdatasets==0.2.10 --no-deps -d /tmp/rd
    python3 scripts/fetch_irates.py /tmp/rd/rdatasets-0.2.10-py3-none-any.whl

Irates starts in 1946-12, so 1964-06 is row 210 and 1989-12 is row 516.
Values are percent per annum. The output is a single-column CSV with a
header; use delta = 1/12 when loading it.
"""
import lzma
import pickle
import sys
import zipfile
from pathlib import Path

FIRST_ROW = 210
LAST_ROW = 516


def main() -> None:
    wheel = sys.argv[1]
    out = Path(sys.argv[2]) if len(sys.argv) > 2 else Path(__file__).resolve().parent.parent / "data" / "irates_1964_1989.csv"
    with zipfile.ZipFile(wheel) as z:
        raw = z.read("rdatasets/_data/Ecdat/Irates.pkl.compress")
    frame = pickle.loads(lzma.decompress(raw))
    series = frame["r1"].to_numpy()[FIRST_ROW : LAST_ROW + 1]
    assert len(series) == 307, len(series)
    with open(out, "w") as fh:
        fh.write("r1\n")
        for v in series:
            fh.write(f"{float(v)!r}\n")
    print(f"wrote {len(series)} rows to {out}")


if __name__ == "__main__":
    main()
