"""The eleven acceptance criteria at their stated sizes and tolerances.

Each test records a PASS/FAIL line that is printed in the terminal
summary at the end of the run.
"""

import time

import pytest

from fnls_lab import artifacts, cli, config, verify


def _timed(func, *args, **kw):
    t0 = time.perf_counter()
    out = func(*args, **kw)
    return out, time.perf_counter() - t0


def test_01_renormalization_identity(record_criterion):
    res, secs = _timed(verify.check_renormalization_identity, Ks=(32, 128), samples=100, tol=1e-12)
    ok = res.passed and secs <= 5.0
    record_criterion(1, "renormalization identity", ok, f"max rel err {res.value:.2e} (<= 1e-12), {secs:.1f} s (<= 5 s)")
    assert res.passed, res.value
    assert secs <= 5.0


_MASS: dict = {}


@pytest.mark.parametrize("alpha", [2.5, 3.0, 4.0])
def test_02_mass_conservation(record_criterion, alpha):
    res, secs = _timed(verify.check_mass_conservation, alpha, K=128, dt=1e-3, t_end=1.0, tol=1e-8)
    _MASS[alpha] = (res.value, secs, res.passed and secs <= 30.0)
    detail = "; ".join(f"alpha={a}: {v:.2e} in {t:.1f} s" for a, (v, t, _) in _MASS.items())
    record_criterion(2, "mass conservation (rel drift <= 1e-8, <= 30 s each)",
                     all(ok for _, _, ok in _MASS.values()), detail)
    assert res.passed, res.value
    assert secs <= 30.0


def test_03_gauge_G(record_criterion):
    res = verify.check_gauge_G(alpha=3.0, K=64, dt=1e-3, t_end=1.0, tol=1e-6)
    record_criterion(3, "gauge G equivalence", res.passed, f"max L2 diff {res.value:.2e} (<= 1e-6)")
    assert res.passed, res.value


def test_04_gauge_J(record_criterion):
    res = verify.check_gauge_J(alpha=3.0, K=32, tol=1e-6)
    record_criterion(4, "gauge J residual", res.passed, f"max residual {res.value:.2e} (<= 1e-6)")
    assert res.passed, res.value


def test_05_resonance_bound(record_criterion):
    t0 = time.perf_counter()
    mins = {alpha: verify.check_resonance_bound(alpha, 64).worst_ratio for alpha in (2.5, 3.0, 4.0)}
    control = verify.check_resonance_bound(2.0, 64).worst_ratio
    secs = time.perf_counter() - t0
    ok = all(v > 0 for v in mins.values()) and abs(control - 2.0) <= 1e-12 and secs <= 60.0
    detail = ", ".join(f"alpha={a}: {v:.4f}" for a, v in mins.items()) + f"; alpha=2: {control!r}; {secs:.1f} s"
    record_criterion(5, "resonance lower bound (R=64)", ok, detail)
    assert all(v > 0 for v in mins.values())
    assert abs(control - 2.0) <= 1e-12
    assert secs <= 60.0


def test_06_counting_lemma(record_criterion):
    rep = verify.sample_counting_lemma(1000, seed=0)
    v = rep.extra["violations"]
    record_criterion(6, "counting lemma", v == 0, f"{v} violations in {rep.samples} instances")
    assert rep.samples == 1000 and v == 0


def test_07_differentiation_laws(record_criterion):
    t0 = time.perf_counter()
    m = verify.check_mass_derivative(4, "line", alpha=3.0, K=32, dt=1e-3, t_end=0.2, tol=1e-4)
    six = [verify.check_mass_derivative(6, variant, alpha=3.0, K=16, dt=1e-4, t_end=0.02, tol=1e-3)
           for variant in ("line", "torus")]
    secs = time.perf_counter() - t0
    ok = m.passed and all(r.passed for r in six) and secs <= 120.0
    detail = (f"dM/dt {m.value:.2e} (<= 1e-4); dM4/dt line {six[0].value:.2e}, torus {six[1].value:.2e} "
              f"(<= 1e-3); {secs:.1f} s")
    record_criterion(7, "differentiation-law identities", ok, detail)
    assert m.passed and all(r.passed for r in six)
    assert secs <= 120.0


def test_08_enn_identity(record_criterion):
    res = verify.check_enn_identity(alpha=3.0, K=16, t_end=1.0, tol=1e-5)
    record_criterion(8, "EnN identity", res.passed, f"max per-mode err {res.value:.2e} (<= 1e-5)")
    assert res.passed, res.value


def test_09_almost_conservation_sweep(record_criterion):
    t0 = time.perf_counter()
    reports = {}
    for variant in ("torus", "line"):
        cfg = config.load(config.CONFIG_DIR / f"sweep_{variant}.toml")
        sw = cfg.sweep
        reports[variant] = verify.sweep_almost_conservation(
            cfg.equation, cfg.integrator, sw.Ns, sw.s, sw.variant, sw.M_rule, sw.margin, sw.free_flow, sw.noise_floor)
    secs = time.perf_counter() - t0
    bounds = {"torus": -0.5, "line": -1.0}
    checks = []
    parts = []
    for v, rep in reports.items():
        checks += [rep.Ns == [4.0, 8.0, 16.0, 32.0], rep.monotone, rep.fitted_slope <= bounds[v],
                   max(rep.free_flow_decrements) <= 1e-12]
        parts.append(f"{v}: slope {rep.fitted_slope:.2f} (<= {bounds[v]}), monotone {rep.monotone}, "
                     f"free flow {max(rep.free_flow_decrements):.1e}")
    ok = all(checks) and secs <= 600.0
    record_criterion(9, "almost-conservation sweep", ok, "; ".join(parts) + f"; {secs:.0f} s (<= 600 s)")
    assert reports["torus"].alpha == 3.0 and reports["torus"].s == pytest.approx(-1 / 6)
    assert reports["line"].alpha == 2.5
    assert all(checks), parts
    assert secs <= 600.0


def test_10_determinism(record_criterion, tmp_path):
    argv = ["simulate", "--seed", "11", "--set", 'initial_data.kind="random"', "--set", "initial_data.gamma=1.0"]
    codes = [cli.main(argv + ["--output", str(tmp_path / name)]) for name in ("a", "b")]
    a = (tmp_path / "a" / artifacts.DIAGNOSTICS_CSV).read_bytes()
    b = (tmp_path / "b" / artifacts.DIAGNOSTICS_CSV).read_bytes()
    ok = codes == [0, 0] and a == b
    record_criterion(10, "determinism", ok, f"diagnostics.csv identical: {a == b} ({len(a)} bytes)")
    assert codes == [0, 0]
    assert a == b


def test_11_convergence_order(record_criterion):
    res = verify.check_convergence_order(alpha=3.0, K=128, dts=(4e-3, 2e-3, 1e-3), window=(12.0, 20.0))
    ratios = res.details["ratios"]
    record_criterion(11, "convergence order", res.passed, "ratios " + ", ".join(f"{r:.2f}" for r in ratios) + " (in [12, 20])")
    assert res.passed, ratios
