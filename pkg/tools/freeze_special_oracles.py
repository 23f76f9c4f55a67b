"""Generate frozen reference values for the special-function tests.

Requires mpmath (not a package dependency; available in dev environments).
Values are pasted into tests/test_special.py as frozen constants.
"""

import mpmath as mp

mp.mp.dps = 40


def main():
    print("J5_AT_10 =", float(mp.besselj(5, 10)))
    zero = mp.findroot(lambda t: mp.besselj(0, t), mp.mpf("2.40482"))
    print("FIRST_J0_ZERO =", float(zero))
    l, x = 10, 30
    h = mp.sqrt(mp.pi / (2 * x)) * (mp.besselj(l + mp.mpf(1) / 2, x) + 1j * mp.bessely(l + mp.mpf(1) / 2, x))
    print("SPH_H10_AT_30 =", complex(h))


if __name__ == "__main__":
    main()
