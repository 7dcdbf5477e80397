"""Smoke test for the passive_isac_py extension module.

Build and install first, e.g. from crates/py:
    maturin build --release -o dist && pip install dist/*.whl
"""

import csv
import io
import math
import random
import sys

import passive_isac_py as pi


def cn(rng, variance=1.0):
    s = math.sqrt(variance / 2.0)
    return complex(rng.gauss(0.0, s), rng.gauss(0.0, s))


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    return cond


def main():
    rng = random.Random(7)
    ok = True

    rho = pi.asymptotic_threshold(1e-3, 8)
    ok &= check(abs(pi.asymptotic_pfa(rho, 8) - 1e-3) < 1e-10, "threshold inverts the false-alarm curve")
    ok &= check(pi.asymptotic_pd(rho, 8, 40.0) > pi.asymptotic_pd(rho, 8, 10.0), "pd increases with kappa")

    m, l = 3, 400
    h_t = [[cn(rng, 0.2)] for _ in range(m)]
    h_d = [[cn(rng, 4.0)] for _ in range(m)]
    k = pi.kappa_general(h_t, h_d, 1.0, l)
    snr_t = sum(abs(r[0]) ** 2 for r in h_t) / m
    snr_d = sum(abs(r[0]) ** 2 for r in h_d) / m
    ok &= check(abs(k / pi.kappa_single_cu(l, m, snr_t, snr_d) - 1.0) < 1e-10, "single-user kappa closed form")

    s = [cn(rng) for _ in range(l)]
    rows = [[h_t[i][0] * s[n] + cn(rng) for n in range(l)] for i in range(m)]
    rows += [[h_d[i][0] * s[n] + cn(rng) for n in range(l)] for i in range(m)]
    stat = pi.glrt_statistic(rows, 1.0, 1)
    ok &= check(stat >= 0.0 and math.isfinite(stat), f"GLRT statistic {stat:.3f} is finite and non-negative")

    try:
        pi.glrt_statistic(rows[:3], 1.0, 1)
        ok &= check(False, "odd row count is rejected")
    except RuntimeError:
        ok &= check(True, "odd row count is rejected")

    text = pi.default_config("beampattern")
    tables = pi.run_experiment(text)
    reader = csv.reader(line for line in io.StringIO(tables["beampattern"]) if not line.startswith("#"))
    header = next(reader)
    ok &= check(header[0] == "angle_deg" and sum(1 for _ in reader) == 721, "beampattern table has 721 angles")

    try:
        pi.run_experiment("pfa = 3.0")
        ok &= check(False, "invalid configuration raises ValueError")
    except ValueError:
        ok &= check(True, "invalid configuration raises ValueError")

    checks = pi.validate_checks(2024)
    ok &= check(all(c[2] for c in checks), f"{len(checks)} fast validation checks pass")
    ok &= check(isinstance(pi.__version__, str), "version string present")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
