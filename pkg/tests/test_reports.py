import csv
import io
import json
import math

import pytest

from fnls_lab.reports import BoundReport, CheckResult, ScalingReport, fit_line


def make_report(**kw):
    Ns = [4, 8, 16, 32]
    dec = [2.0 ** (-3 * k) for k in range(2, 6)]
    slope, _ = fit_line(Ns, dec)
    args = dict(Ns=Ns, decrements=dec, fitted_slope=slope, theory_exponent=-1.5, residual=0.0,
                variant="torus", alpha=3.0, s=-1 / 6, theory_candidates=[-1.5, -2.0], margin=1.0,
                free_flow_decrements=[0.0] * 4, snapshot_interval=0.05)
    args.update(kw)
    return ScalingReport(**args)


def test_fit_line_exact_power_law():
    slope, icpt = fit_line([2, 4, 8], [3 * 2.0 ** -4, 3 * 4.0 ** -4, 3 * 8.0 ** -4])
    assert slope == pytest.approx(-4.0) and icpt == pytest.approx(math.log2(3))
    assert math.isnan(fit_line([1, 2], [0.0, 1.0])[0])


def test_scaling_report_pass_rules():
    rep = make_report()
    assert rep.fitted_slope == pytest.approx(-3.0) and rep.slope_bound == -0.5 and rep.passed
    assert not make_report(monotone=False).passed
    assert not make_report(free_flow_decrements=[0.0, 1e-9, 0.0, 0.0]).passed
    assert not make_report(fitted_slope=0.1).passed
    with pytest.raises(ValueError):
        make_report(Ns=[1, 2])


def test_scaling_report_json_round_trip():
    rep = make_report()
    back = ScalingReport.from_dict(json.loads(rep.to_json()))
    assert back == rep
    assert back.refit() == pytest.approx(rep.fitted_slope)


def test_scaling_report_csv_and_script():
    rep = make_report()
    text = rep.to_csv()
    assert text.endswith("\r\n")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0][:2] == ["N", "decrement"]
    assert [float(r[0]) for r in rows[1:]] == rep.Ns
    assert float(rows[2][4]) == pytest.approx(math.log2(rep.decrements[1]))
    assert "sweep.csv" in rep.gnuplot_script()
    assert "fitted_slope" in rep.to_text()


def test_bound_report():
    rep = BoundReport("check", 10, 0.5, (1, -1), {"alpha": 3.0}, True, {"k": 1})
    back = BoundReport.from_dict(json.loads(rep.to_json()))
    assert back == rep
    assert "param.alpha" in rep.to_text()
    with pytest.raises(ValueError):
        BoundReport("check", 1, math.inf, ())


def test_check_result_line():
    line = CheckResult("x", 1.5e-9, 1e-8, True).line()
    assert line.startswith("PASS  x:") and "1.0e-08" in line
