"""Experiment configuration: TOML (or JSON) files, dotted overrides, validation.

Every key is checked against a fixed schema before anything runs; errors
name the dotted key path and, when it can be found, the line in the file.
"""

from __future__ import annotations

import copy
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

import numpy as np

from fnls_lab.dynamics import DIAGNOSTICS, EquationSpec, InitialDataSpec, IntegratorSpec
from fnls_lab.imethod import IOperatorSpec
from fnls_lab.spectral import GridSpec, NormSpec

CONFIG_DIR = Path(__file__).with_name("configs")

NUM = (int, float)

SCHEMA = {
    "name": str,
    "seed": int,
    "output_dir": str,
    "diagnostics": list,
    "grid": {"modes": int, "period": (int, float, str), "dealias_fraction": NUM},
    "equation": {"alpha": NUM, "sign": (str, int), "form": str, "coupling": NUM},
    "initial_data": {
        "kind": str, "amplitude": NUM, "profile": str, "width": NUM, "carrier": int,
        "coefficients": dict, "gamma": NUM, "seed": int, "modulus": str,
    },
    "integrator": {"scheme": str, "dt": NUM, "t_end": NUM, "store_every": int},
    "i_operator": {"s": NUM, "N": NUM, "M": NUM, "family": str},
    "norm": {"s": NUM, "M": NUM, "b": NUM},
    "sweep": {
        "variant": str, "Ns": list, "s": NUM, "M_rule": str, "margin": NUM,
        "free_flow": bool, "noise_floor": NUM,
    },
    "probe": {
        "kinds": list, "alpha": NUM, "s": NUM, "size": int, "modes": int, "support": int, "T": NUM,
        "time_samples": int, "gamma": NUM, "harmonics": int, "taper": NUM, "eps": NUM, "eta": NUM,
        "below": NUM, "ks": list, "R": int, "counting_samples": int,
    },
    "verify": {"quick": bool},
}

PROBE_KINDS = ("resonance", "counting", "strichartz4", "strichartz6", "trilinear_line", "trilinear_circle", "refinement")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str, line: Optional[int] = None, source: Optional[str] = None):
        where = f"{source}:" if source else ""
        where += f"{line}: " if line else " " if source else ""
        super().__init__(f"{where}{path}: {message}" if path else f"{where}{message}")
        self.path = path
        self.line = line
        self.source = source


@dataclass(frozen=True)
class SweepConfig:
    variant: str = "torus"
    Ns: tuple = (4, 8, 16, 32)
    s: float = -1.0 / 6.0
    M_rule: str = "N"
    margin: float = 1.0
    free_flow: bool = True
    noise_floor: float = 1e-14


@dataclass(frozen=True)
class ProbeConfig:
    kinds: tuple = PROBE_KINDS[:-1]
    alpha: float = 3.0
    s: Optional[float] = None
    size: int = 100
    modes: int = 32
    support: Optional[int] = None
    T: float = 1.0
    time_samples: int = 256
    gamma: float = 0.5
    harmonics: int = 2
    taper: float = 0.1
    eps: float = 0.01
    eta: float = 0.01
    below: float = 0.25
    ks: tuple = (3, 4, 5, 6)
    R: int = 64
    counting_samples: int = 1000


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    name: str
    equation: EquationSpec
    integrator: IntegratorSpec
    grid: GridSpec
    i_operator: Optional[IOperatorSpec]
    diagnostics: tuple
    seed: int
    output_dir: str
    norm: NormSpec = NormSpec()
    sweep: SweepConfig = SweepConfig()
    probe: ProbeConfig = ProbeConfig()
    quick_verify: bool = True
    raw: dict = field(default_factory=dict)


# -- loading -----------------------------------------------------------------------------


def _key_line(text: Optional[str], path: str) -> Optional[int]:
    """Best-effort line of ``path`` (dotted) in TOML ``text``."""
    if not text:
        return None
    parts = path.split(".")
    table, key = parts[:-1], parts[-1]
    current: list = []
    header = re.compile(r"^\s*\[([^\[\]]+)\]\s*(#.*)?$")
    for i, line in enumerate(text.splitlines(), 1):
        m = header.match(line)
        if m:
            current = [p.strip().strip('"') for p in m.group(1).split(".")]
            if current == parts:
                return i
            continue
        m = re.match(r'^\s*"?([A-Za-z0-9_\-]+)"?\s*=', line)
        if m and m.group(1) == key and current == table:
            return i
    return None


def load_raw(path) -> tuple:
    """``(dict, text)`` of a TOML or JSON config file."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("", f"cannot read config: {exc}", source=str(p)) from None
    if p.suffix == ".json":
        try:
            return json.loads(text), None
        except json.JSONDecodeError as exc:
            raise ConfigError("", exc.msg, exc.lineno, str(p)) from None
    try:
        return tomllib.loads(text), text
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError("", str(exc), int(m.group(1)) if m else None, str(p)) from None


def parse_value(text: str):
    """Parse an override value as a TOML literal, falling back to a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``key.path=value`` overrides to a copy of ``raw``."""
    out = copy.deepcopy(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(item, "override must look like key.path=value")
        key, value = item.split("=", 1)
        key = key.strip()
        parts = key.split(".")
        node = SCHEMA
        for p in parts:
            if not isinstance(node, dict) or p not in node:
                raise ConfigError(key, "unknown key")
            node = node[p]
        target = out
        for p in parts[:-1]:
            target = target.setdefault(p, {})
        target[parts[-1]] = parse_value(value.strip())
    return out


def _check_keys(raw: dict, schema: dict, prefix: str, text, source):
    for k, v in raw.items():
        path = f"{prefix}{k}"
        if k not in schema:
            raise ConfigError(path, "unknown key", _key_line(text, path), source)
        expected = schema[k]
        if isinstance(expected, dict):
            if not isinstance(v, dict):
                raise ConfigError(path, "expected a table", _key_line(text, path), source)
            _check_keys(v, expected, path + ".", text, source)
        else:
            kinds = expected if isinstance(expected, tuple) else (expected,)
            ok = isinstance(v, kinds) and not (isinstance(v, bool) and bool not in kinds)
            if not ok:
                names = "/".join(t.__name__ for t in kinds)
                raise ConfigError(path, f"expected {names}, got {type(v).__name__}", _key_line(text, path), source)


def parse_period(value) -> float:
    """A number, or a string such as ``'16pi'`` / ``'16*pi'`` / ``'pi'``."""
    if isinstance(value, (int, float)):
        return float(value)
    m = re.fullmatch(r"\s*([0-9.eE+\-]*)\s*\*?\s*pi\s*", value)
    if not m:
        raise ValueError(f"cannot parse period {value!r}")
    coef = float(m.group(1)) if m.group(1) else 1.0
    return coef * math.pi


def _coefficients(table: dict) -> dict:
    out = {}
    for k, v in table.items():
        a = complex(v[0], v[1]) if isinstance(v, list) else complex(v)
        out[int(k)] = a
    return out


def build(raw: dict, text: Optional[str] = None, source: Optional[str] = None) -> ExperimentConfig:
    """Validate ``raw`` as a whole and build the typed configuration."""
    _check_keys(raw, SCHEMA, "", text, source)

    def section(name):
        return dict(raw.get(name, {}))

    def fail(path, exc):
        raise ConfigError(path, str(exc), _key_line(text, path), source) from None

    seed = int(raw.get("seed", 0))
    g = section("grid")
    try:
        grid = GridSpec(
            int(g.get("modes", 64)),
            parse_period(g.get("period", 2 * math.pi)),
            float(g.get("dealias_fraction", 2.0 / 3.0)),
        )
    except (ValueError, TypeError) as exc:
        fail("grid", exc)
    d = section("initial_data")
    if "coefficients" in d:
        try:
            d["coefficients"] = _coefficients(d["coefficients"])
        except (ValueError, TypeError, IndexError) as exc:
            fail("initial_data.coefficients", exc)
    d.setdefault("seed", seed)
    try:
        init = InitialDataSpec(**d)
    except (ValueError, TypeError) as exc:
        fail("initial_data", exc)
    e = section("equation")
    try:
        ref = None
        if e.get("form") == "gauged":
            ref = init.build(grid).coeffs
        equation = EquationSpec(
            grid,
            float(e.get("alpha", 3.0)),
            e.get("sign", "defocusing"),
            e.get("form", "original"),
            init,
            ref,
            float(e.get("coupling", 1.0)),
        )
    except (ValueError, TypeError) as exc:
        fail("equation", exc)
    try:
        integrator = IntegratorSpec(**{k: float(v) if k in ("dt", "t_end") else v for k, v in section("integrator").items()})
    except (ValueError, TypeError) as exc:
        fail("integrator", exc)
    iop = None
    if "i_operator" in raw:
        try:
            iop = IOperatorSpec(**section("i_operator"))
        except (ValueError, TypeError) as exc:
            fail("i_operator", exc)
    try:
        norm = NormSpec(**section("norm"))
    except (ValueError, TypeError) as exc:
        fail("norm", exc)
    diags = tuple(raw.get("diagnostics", ["mass"]))
    for name in diags:
        if name not in DIAGNOSTICS:
            fail("diagnostics", f"unknown diagnostic {name!r}; known: {', '.join(DIAGNOSTICS)}")
    if iop is None and set(diags) & {"modified_mass", "corrected_mass", "lambda4_residual_imag"}:
        fail("diagnostics", "I-operator diagnostics need an [i_operator] table")
    sw = section("sweep")
    if "Ns" in sw:
        sw["Ns"] = tuple(sw["Ns"])
    try:
        sweep = SweepConfig(**sw)
        if sweep.variant not in ("line", "torus"):
            raise ValueError(f"variant must be 'line' or 'torus', got {sweep.variant!r}")
        if sweep.M_rule not in ("N", "N2", "1"):
            raise ValueError(f"M_rule must be 'N', 'N2' or '1', got {sweep.M_rule!r}")
        if len(sweep.Ns) < 4 or any(N < 1 or not math.log2(N).is_integer() for N in sweep.Ns):
            raise ValueError("Ns must hold at least four dyadic thresholds")
    except (ValueError, TypeError) as exc:
        fail("sweep", exc)
    pr = section("probe")
    for k in ("kinds", "ks"):
        if k in pr:
            pr[k] = tuple(pr[k])
    try:
        probe = ProbeConfig(**pr)
        bad = [k for k in probe.kinds if k not in PROBE_KINDS]
        if bad:
            raise ValueError(f"unknown probe kinds {bad}; known: {', '.join(PROBE_KINDS)}")
    except (ValueError, TypeError) as exc:
        fail("probe", exc)
    return ExperimentConfig(
        name=str(raw.get("name", "experiment")),
        equation=equation,
        integrator=integrator,
        grid=grid,
        i_operator=iop,
        diagnostics=diags,
        seed=seed,
        output_dir=str(raw.get("output_dir", "runs")),
        norm=norm,
        sweep=sweep,
        probe=probe,
        quick_verify=bool(section("verify").get("quick", True)),
        raw=copy.deepcopy(raw),
    )


def load(path=None, overrides=(), seed: Optional[int] = None) -> ExperimentConfig:
    """Load ``path`` (default: the shipped ``default.toml``), apply overrides and validate."""
    path = Path(path) if path is not None else CONFIG_DIR / "default.toml"
    raw, text = load_raw(path)
    raw = apply_overrides(raw, overrides)
    if seed is not None:
        raw["seed"] = int(seed)
    return build(raw, text, str(path))


def to_jsonable(raw: dict) -> dict:
    """Config snapshot for manifests (numpy-free, JSON-safe)."""
    return json.loads(json.dumps(raw, default=lambda o: o.tolist() if isinstance(o, np.ndarray) else str(o)))
