"""Generate frozen oracle constants for the decay-rate integral tests.

Composite Simpson at one million panels applied to the brute-force scan
evaluation of phi (coarse scan plus golden-section refinement, validated
against the 10^4-point scan to 2e-15 on random samples).  Output values are
pasted into the test suite as frozen constants; rerun this script to
regenerate them.  Runtime is a few minutes.
"""

import math
import time

import numpy as np

from pmlrate.rate import _scan_min_array
from pmlrate.scaling import PmlProfile, make_scaling


def simpson_of_scan(profile, a, b, panels=1_000_000, chunk=1500):
    n = 2 * panels + 1
    h = (b - a) / (2 * panels)
    total = 0.0
    ends = 0.0
    acc4 = 0.0
    acc2 = 0.0
    for start in range(0, n, chunk):
        idx = np.arange(start, min(start + chunk, n))
        r = a + idx * h
        vals = _scan_min_array(profile, r, n_scan=2000)
        edge = (idx == 0) | (idx == n - 1)
        odd = (idx % 2 == 1) & ~edge
        even = (idx % 2 == 0) & ~edge
        ends += vals[edge].sum()
        acc4 += vals[odd].sum()
        acc2 += vals[even].sum()
    total = h / 3.0 * (ends + 4.0 * acc4 + 2.0 * acc2)
    return total


def main():
    cases = [
        ("cubic(3,6) theta=pi/8 d=2 [3.0, 3.8]", make_scaling("cubic", 3.0, 6.0), math.pi / 8, 3.0, 3.8),
        ("cubic(2,4) theta=pi/4 d=2 [2.0, 2.8]", make_scaling("cubic", 2.0, 4.0), math.pi / 4, 2.0, 2.8),
    ]
    for label, sf, theta, a, b in cases:
        profile = PmlProfile(sf, theta)
        t0 = time.time()
        value = simpson_of_scan(profile, a, b)
        print(f"{label}: {value!r}   ({time.time() - t0:.1f} s)")


if __name__ == "__main__":
    main()
