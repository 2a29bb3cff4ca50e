"""Acceptance criteria, one test each, at their stated tolerances.

Each test records a ``CRITERION n: PASS|FAIL ...`` line that is printed
immediately and again in the pytest terminal summary.  Run directly with
``python tests/test_acceptance.py`` or ``pytest tests/test_acceptance.py``.
"""
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ACCEPTANCE_LINES, power_model  # noqa: E402

from simpvi.analysis import (  # noqa: E402
    energy_error_series,
    half_drift_ratio,
    momentum_error_series,
    nutation_error_series,
    sup_norm,
)
from simpvi.elliptic import exact_nutation, nutation_cubic, nutation_period  # noqa: E402
from simpvi.experiments import (  # noqa: E402
    energy_sweep,
    nutation_sweep,
    reduced_comparison,
    reference_cubic,
    reference_period,
    run,
)
from simpvi.simpson import discrete_lagrangian  # noqa: E402
from simpvi.systems import PRESETS, top_conserved_momenta  # noqa: E402
from simpvi.validation import elliptic_identities, gear_exactness, validate_preset  # noqa: E402

TOP3 = "lagrange-top-table3"
TOP4 = "lagrange-top-table4"
PENDULUM = "double-pendulum-table1"


def record(number, ok, detail):
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _in(value, lo, hi):
    return lo <= value <= hi


def test_criterion_1_nutation_period():
    preset = PRESETS[TOP3]
    t0 = time.perf_counter()
    T = nutation_period(nutation_cubic(preset.params, preset.q0, preset.qdot0))
    elapsed = time.perf_counter() - t0
    ok = abs(T - 1.84671) <= 5e-5 and elapsed < 1.0
    record(1, ok, f"period {T:.10f} s, target 1.84671 +/- 5e-5 (off by {T - 1.84671:+.2e}); {elapsed * 1e3:.1f} ms")


def test_criterion_2_exact_solution_tracking():
    preset = PRESETS[TOP3]
    T = reference_period(preset)
    cubic = reference_cubic(preset)
    ref = lambda t: exact_nutation(cubic, t)  # noqa: E731
    t0 = time.perf_counter()
    fine = sup_norm(nutation_error_series(run(preset, "simpson", T / 2048, T), ref))
    coarse = sup_norm(nutation_error_series(run(preset, "simpson", 0.05 * T, T), ref))
    elapsed = time.perf_counter() - t0
    ok = fine <= 1e-8 and coarse <= 1e-3 and elapsed < 10.0
    record(2, ok, f"h=T/2048: {fine:.3e} (<= 1e-8); h=0.05T: {coarse:.3e} (<= 1e-3); {elapsed:.2f} s")


def _timed(fn):
    t0 = time.perf_counter()
    rep = fn()
    return rep, time.perf_counter() - t0


def _order_sweeps(integrator):
    T = reference_period(PRESETS[TOP3])
    nut, t_nut = _timed(lambda: nutation_sweep(TOP3, integrator, 0.05 * T, 4, T))
    en, t_en = _timed(lambda: energy_sweep(PENDULUM, integrator, 0.1, 4, 10.0))
    return nut, t_nut, en, t_en


def test_criterion_3_simpson_order_four():
    nut, t_nut, en, t_en = _order_sweeps("simpson")
    ok = _in(nut.slope, 3.5, 4.5) and _in(en.slope, 3.5, 4.5) and t_nut < 60 and t_en < 60
    record(3, ok, f"nutation slope {nut.slope:.3f} ({t_nut:.1f} s); pendulum energy slope {en.slope:.3f} "
                  f"({t_en:.1f} s); target [3.5, 4.5]")


def test_criterion_4_midpoint_order_two():
    nut, t_nut, en, t_en = _order_sweeps("midpoint")
    ok = _in(nut.slope, 1.5, 2.5) and _in(en.slope, 1.5, 2.5) and t_nut < 60 and t_en < 60
    record(4, ok, f"nutation slope {nut.slope:.3f} ({t_nut:.1f} s); pendulum energy slope {en.slope:.3f} "
                  f"({t_en:.1f} s); target [1.5, 2.5]")


def test_criterion_5_momentum_conservation():
    preset = PRESETS[TOP3]
    T = reference_period(preset)
    drifts = {}
    for method in ("simpson", "midpoint"):
        traj = run(preset, method, 0.05 * T, 10 * T)
        drifts[method] = max(sup_norm(momentum_error_series(traj, preset.model, k)) for k in (0, 2))
    ok = all(d <= 1e-10 for d in drifts.values())
    record(5, ok, "max relative p_phi/p_psi drift " + ", ".join(f"{k} {v:.2e}" for k, v in drifts.items())
           + " (<= 1e-10)")


def test_criterion_6_no_energy_drift():
    preset = PRESETS[PENDULUM]
    ratios = {}
    for method in ("simpson", "rk4"):
        ratios[method] = half_drift_ratio(energy_error_series(run(preset, method, 0.1, 10.0), preset.model))
    ok = ratios["simpson"] <= 2.0 and ratios["rk4"] > 2.0
    record(6, ok, f"second/first half max |e_H|: simpson {ratios['simpson']:.3f} (<= 2), "
                  f"rk4 {ratios['rk4']:.3f} (must exceed 2)")


def test_criterion_7_reduced_cross_check():
    rep, elapsed = _timed(lambda: reduced_comparison(h0=0.1, n_halvings=4, horizon=1.0))
    ok = _in(rep.slope, 3.5, 4.5)
    norms = ", ".join(f"{e:.2e}" for e in rep.norms)
    record(7, ok, f"slope {rep.slope:.3f} in [3.5, 4.5]; norms {norms}; {elapsed:.1f} s")


def test_criterion_8_reduced_momenta():
    preset = PRESETS[TOP4]
    p_phi, p_psi = top_conserved_momenta(preset.params, preset.q0, preset.qdot0)
    e_phi = abs(p_phi - 2 * math.pi * math.sqrt(3)) / (2 * math.pi * math.sqrt(3))
    e_psi = abs(p_psi - 4 * math.pi) / (4 * math.pi)
    ok = e_phi <= 1e-14 and e_psi <= 1e-14
    record(8, ok, f"p_phi rel err {e_phi:.1e}, p_psi rel err {e_psi:.1e} (<= 1e-14)")


def _quadrature_deviation():
    a, h = 0.4, 0.9
    worst = 0.0
    for k in range(4):
        exact = h / 2 - ((a + h) ** (k + 1) - a ** (k + 1)) / (k + 1)
        got = discrete_lagrangian(power_model(k), [a], [a + h / 2], [a + h], h)
        worst = max(worst, abs(got - exact) / abs(exact))
    return worst


def test_criterion_9_property_suites():
    failures = []
    for name in sorted(PRESETS):
        failures += [f"{name}:{f}" for f in validate_preset(PRESETS[name], count=20)["failures"]]
    ell = elliptic_identities(tolerance=1e-12)
    failures += [f"elliptic:{f}" for f in ell["failures"]]
    gear = gear_exactness()
    if not gear["passed"]:
        failures.append("gear")
    quad = _quadrature_deviation()
    if quad > 1e-13:
        failures.append("quadrature")
    ok = not failures
    detail = "all suites pass" if ok else "failing: " + ", ".join(failures)
    record(9, ok, f"{detail} (jacobian rel <= 1e-5, model rel <= 1e-6, elliptic <= 1e-12, "
                  f"gear dev {gear['max_deviation']:.1e}, quadrature dev {quad:.1e})")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s", "-p", "no:cacheprovider"]))
