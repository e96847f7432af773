"""Report containers and their renderings (JSON, aligned text, CSV, gnuplot)."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np


def _plain(x):
    """Convert numpy scalars/arrays and tuples into JSON-friendly values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _aligned(rows):
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


@dataclass
class BoundReport:
    """Outcome of a brute-force bound check or an estimate probe."""

    description: str
    samples: int
    worst_ratio: float
    worst_witness: tuple
    parameters: dict = field(default_factory=dict)
    passed: bool = True
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.worst_ratio):
            raise ValueError(f"worst ratio is not finite: {self.worst_ratio}")

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "BoundReport":
        d = dict(d)
        d["worst_witness"] = tuple(d["worst_witness"])
        return cls(**d)

    def to_text(self) -> str:
        rows = [
            ("check", self.description),
            ("status", "PASS" if self.passed else "FAIL"),
            ("samples", str(self.samples)),
            ("worst_ratio", f"{self.worst_ratio:.12g}"),
            ("worst_witness", str(tuple(self.worst_witness))),
        ]
        rows += [(f"param.{k}", str(v)) for k, v in sorted(self.parameters.items())]
        rows += [(f"extra.{k}", str(v)) for k, v in sorted(self.extra.items())]
        return _aligned(rows)


@dataclass
class ScalingReport:
    """Decrements of a corrected mass against the I-threshold ``N`` and their log-log fit."""

    Ns: list
    decrements: list
    fitted_slope: float
    theory_exponent: float
    residual: float
    manifest_ref: str = ""
    variant: str = "line"
    alpha: float = float("nan")
    s: float = float("nan")
    theory_candidates: list = field(default_factory=list)
    margin: float = 1.0
    monotone: bool = True
    snapshot_interval: float = float("nan")
    noise_floor: float = 0.0
    free_flow_decrements: Optional[list] = None
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.Ns) != len(self.decrements):
            raise ValueError("Ns and decrements must have equal length")

    @property
    def slope_bound(self) -> float:
        return self.theory_exponent + self.margin

    @property
    def passed(self) -> bool:
        ok = self.monotone and self.fitted_slope <= self.slope_bound
        if self.free_flow_decrements is not None:
            ok = ok and max(self.free_flow_decrements) <= 1e-12
        return bool(ok)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["slope_bound"] = self.slope_bound
        d["passed"] = self.passed
        return _plain(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingReport":
        d = {k: v for k, v in d.items() if k not in ("slope_bound", "passed")}
        for k in ("alpha", "s", "snapshot_interval", "fitted_slope", "residual"):
            if isinstance(d.get(k), str):
                d[k] = float(d[k])
        return cls(**d)

    def to_text(self) -> str:
        rows = [
            ("variant", self.variant),
            ("status", "PASS" if self.passed else "FAIL"),
            ("alpha", f"{self.alpha:g}"),
            ("s", f"{self.s:g}"),
            ("fitted_slope", f"{self.fitted_slope:.6g}"),
            ("theory_exponent", f"{self.theory_exponent:.6g}"),
            ("theory_candidates", ", ".join(f"{c:.6g}" for c in self.theory_candidates)),
            ("slope_bound", f"{self.slope_bound:.6g}"),
            ("fit_residual", f"{self.residual:.3g}"),
            ("monotone", str(self.monotone)),
            ("snapshot_interval", f"{self.snapshot_interval:g}"),
        ]
        if self.free_flow_decrements is not None:
            rows.append(("free_flow_max", f"{max(self.free_flow_decrements):.3g}"))
        lines = [_aligned(rows), "", f"{'N':>8}  {'decrement':>14}"]
        for N, d in zip(self.Ns, self.decrements):
            lines.append(f"{N:>8g}  {d:>14.6e}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        """RFC-4180 CSV: N, decrement, log2 N, log2 decrement, fitted log2 value."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["N", "decrement", "log2_N", "log2_decrement", "fit_log2_decrement"])
        a, b = fit_line(self.Ns, self.decrements)
        for N, d in zip(self.Ns, self.decrements):
            ld = math.log2(d) if d > 0 else float("nan")
            w.writerow([repr(float(N)), repr(float(d)), repr(math.log2(N)), repr(ld), repr(a * math.log2(N) + b)])
        return buf.getvalue()

    def gnuplot_script(self, csv_name: str = "sweep.csv") -> str:
        return "\n".join([
            "set datafile separator ','",
            "set logscale xy 2",
            "set xlabel 'N'",
            "set ylabel 'sup_t |M4(t) - M4(0)|'",
            f"set title '{self.variant}: slope {self.fitted_slope:.3g} (theory {self.theory_exponent:.3g})'",
            f"plot '{csv_name}' using 1:2 skip 1 with linespoints title 'decrement', \\",
            f"     '{csv_name}' using 1:(2**$5) skip 1 with lines title 'fit'",
            "",
        ])

    def refit(self) -> float:
        return fit_line(self.Ns, self.decrements)[0]


def fit_line(Ns, decrements):
    """Least-squares ``(slope, intercept)`` of ``log2 decrement`` against ``log2 N``."""
    d = np.asarray(decrements, dtype=float)
    if np.any(d <= 0):
        return float("nan"), float("nan")
    slope, icpt = np.polyfit(np.log2(np.asarray(Ns, dtype=float)), np.log2(d), 1)
    return float(slope), float(icpt)


@dataclass
class CheckResult:
    """One line of a verification suite."""

    name: str
    value: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.value:.3e} (tolerance {self.tolerance:.1e})"
