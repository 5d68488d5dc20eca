"""Pin the clock/shift round-trip distances used by the acceptance suite.

Writes tests/data/monodromy_calibration.json.  Rerun only when the
monodromy maps change on purpose.
"""
import json
import os

from kflat.covers import torus_cover
from kflat.monodromy import round_trip_report
from kflat.scenarios import clockshift

OUT = os.path.join(os.path.dirname(__file__), "..", "tests", "data", "monodromy_calibration.json")


def main():
    cover = torus_cover(48)
    out = {"grid": 48, "torus": {}}
    for n in (8, 16, 32):
        rep = round_trip_report(clockshift(cover, n), cover, threshold=10, flatness=False)
        out["torus"][str(n)] = {"defect": rep.defect_in, "distance": rep.distance,
                                "cocycleDistance": rep.cocycle_distance, "ratio": rep.ratio}
        print(n, out["torus"][str(n)])
    with open(OUT, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")


if __name__ == "__main__":
    main()
