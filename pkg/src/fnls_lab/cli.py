"""``fnls-lab``: simulate, verify, probe, sweep and report.

Exit status is 0 when every hard check passes, 1 when one fails and 2 on
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from fnls_lab import __version__, artifacts, config, dynamics, verify
from fnls_lab.reports import BoundReport, CheckResult, ScalingReport

log = logging.getLogger("fnls_lab")


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("FNLS_LAB_JOBS", "1")))
    except ValueError:
        return 1


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="TOML or JSON experiment file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value by dotted path (repeatable)")
    p.add_argument("--jobs", type=int, default=_default_jobs(), help="worker processes (env FNLS_LAB_JOBS)")
    p.add_argument("--output", type=Path, help="output directory")
    p.add_argument("--seed", type=int, help="seed for random data and ensembles")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fnls-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fnls-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", help="integrate one trajectory and write a run directory")
    _common(p)
    p = sub.add_parser("verify", help="run the identity and lemma suite")
    _common(p)
    p.add_argument("--full", action="store_true", help="use the full-size checks")
    p = sub.add_parser("probe", help="lemma checkers and estimate probes")
    _common(p)
    p = sub.add_parser("sweep", help="almost-conservation sweep over I-thresholds")
    _common(p)
    p.add_argument("--variant", choices=("line", "torus", "all"), help="shipped sweep (default: torus)")
    p.add_argument("--alpha", type=float, help="dispersion order")
    p.add_argument("--s", type=float, help="Sobolev index of the I-operator")
    p = sub.add_parser("report", help="render stored results as tables and gnuplot scripts")
    p.add_argument("paths", nargs="+", type=Path, help="run directories or result JSON files")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _out_dir(args, cfg, command: str) -> Path:
    if args.output is not None:
        return args.output
    return Path(cfg.output_dir) / f"{cfg.name}-{command}"


def _load(args, path=None, extra=()):
    return config.load(path if path is not None else args.config, list(extra) + list(args.overrides), args.seed)


def _manifest(args, command, cfg, **extra):
    return artifacts.manifest(command, config.to_jsonable(cfg.raw), argv=sys.argv[1:], **extra)


# -- commands ----------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg, "simulate")
    ok = True
    with artifacts.RunDirectory(out) as tmp:
        try:
            traj = dynamics.run(cfg.equation, cfg.integrator, cfg.diagnostics, cfg.i_operator, cfg.norm)
        except dynamics.IntegrationError as exc:
            artifacts.write_trajectory(tmp, exc.trajectory, _manifest(args, "simulate", cfg, failed_at=exc.time))
            (tmp / artifacts.FAILED).write_text(f"IntegrationError: {exc}\n", encoding="utf-8")
            ok = False
        else:
            artifacts.write_trajectory(tmp, traj, _manifest(args, "simulate", cfg))
    print(f"{'wrote' if ok else 'FAILED, partial output in'} {out}")
    return 0 if ok else 1


def cmd_verify(args) -> int:
    cfg = _load(args)
    quick = cfg.quick_verify and not args.full
    results = verify.run_suite(quick=quick)
    out = _out_dir(args, cfg, "verify")
    with artifacts.RunDirectory(out) as tmp:
        artifacts.write_json(tmp / "verify.json", {
            "passed": all(r.passed for r in results),
            "quick": quick,
            "checks": [r.to_dict() for r in results],
        })
        artifacts.write_json(tmp / artifacts.MANIFEST, _manifest(args, "verify", cfg))
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def _probe_reports(cfg) -> list:
    pc = cfg.probe
    ens = verify.EnsembleSpec(size=pc.size, modes=pc.modes, support=pc.support, T=pc.T,
                              time_samples=pc.time_samples, gamma=pc.gamma, harmonics=pc.harmonics,
                              taper=pc.taper, seed=cfg.seed)
    out = []
    for kind in pc.kinds:
        if kind == "resonance":
            out.append((kind, verify.check_resonance_bound(pc.alpha, pc.R)))
        elif kind == "counting":
            out.append((kind, verify.sample_counting_lemma(pc.counting_samples, cfg.seed)))
        elif kind == "refinement":
            K = cfg.grid.modes
            out.append((kind, verify.k_refinement(cfg.equation, cfg.integrator, (K, 2 * K, 4 * K))))
        elif kind in ("strichartz4", "strichartz6"):
            out.append((kind, verify.probe_strichartz(pc.alpha, None, int(kind[-1]), ens, pc.eps, pc.eta)))
        else:
            form = kind.split("_")[1]
            s = pc.s if pc.s is not None else verify.lwp_threshold(pc.alpha, form) + 0.05
            tens = verify.EnsembleSpec(size=pc.size, modes=max(pc.modes, 64), support=pc.support or 10, T=pc.T,
                                       time_samples=pc.time_samples, gamma=pc.gamma, harmonics=pc.harmonics,
                                       taper=pc.taper, seed=cfg.seed)
            out.append((kind, verify.probe_trilinear(pc.alpha, s, form, tens, pc.eps, pc.below, pc.ks)))
    return out


def cmd_probe(args) -> int:
    cfg = _load(args)
    reports = _probe_reports(cfg)
    out = _out_dir(args, cfg, "probe")
    with artifacts.RunDirectory(out) as tmp:
        for kind, rep in reports:
            artifacts.write_json(tmp / f"probe_{kind}.json", rep.to_dict())
            (tmp / f"probe_{kind}.txt").write_text(rep.to_text() + "\n", encoding="utf-8")
        artifacts.write_json(tmp / artifacts.MANIFEST, _manifest(args, "probe", cfg))
    for kind, rep in reports:
        print(f"{'PASS' if rep.passed else 'FAIL'}  {kind}: worst ratio {rep.worst_ratio:.6g}")
    return 0 if all(r.passed for _, r in reports) else 1


def _sweep_one(cfg, manifest_ref: str) -> ScalingReport:
    sw = cfg.sweep
    return verify.sweep_almost_conservation(cfg.equation, cfg.integrator, sw.Ns, sw.s, sw.variant, sw.M_rule,
                                            sw.margin, sw.free_flow, sw.noise_floor, manifest_ref)


def write_sweep(directory: Path, rep: ScalingReport, stem: str = "sweep"):
    artifacts.write_json(directory / f"{stem}.json", rep.to_dict())
    (directory / f"{stem}.csv").write_text(rep.to_csv(), encoding="utf-8", newline="")
    (directory / f"{stem}.gp").write_text(rep.gnuplot_script(f"{stem}.csv"), encoding="utf-8")
    (directory / f"{stem}.txt").write_text(rep.to_text() + "\n", encoding="utf-8")


def cmd_sweep(args) -> int:
    variants = ["line", "torus"] if args.variant == "all" else [args.variant or None]
    cfgs = []
    for v in variants:
        extra = []
        if args.alpha is not None:
            extra.append(f"equation.alpha={args.alpha!r}")
        if args.s is not None:
            extra.append(f"sweep.s={args.s!r}")
        path = args.config
        if path is None:
            path = config.CONFIG_DIR / f"sweep_{v or 'torus'}.toml"
        elif v is not None:
            extra.append(f'sweep.variant="{v}"')
        cfgs.append(_load(args, path, extra))
    base = args.output if args.output is not None else Path(cfgs[0].output_dir)
    outs = [base / c.name if len(cfgs) > 1 or args.output is None else base for c in cfgs]
    refs = [str(o / artifacts.MANIFEST) for o in outs]
    if args.jobs > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_sweep_one, cfgs, refs))
    else:
        reports = [_sweep_one(c, r) for c, r in zip(cfgs, refs)]
    for cfg, out, rep in zip(cfgs, outs, reports):
        with artifacts.RunDirectory(out) as tmp:
            write_sweep(tmp, rep)
            artifacts.write_json(tmp / artifacts.MANIFEST, _manifest(args, "sweep", cfg))
        print(rep.to_text())
        print(f"wrote {out}")
    return 0 if all(r.passed for r in reports) else 1


# -- report ---------------------------------------------------------------------------


def _trajectory_table(directory: Path) -> str:
    cols = artifacts.read_diagnostics(directory)
    t = cols.pop("time")
    names = list(cols)
    width = max([len(n) for n in names] + [10])
    lines = [f"{'diagnostic'.ljust(width)}  {'initial':>24}  {'final':>24}  {'max |drift|':>12}"]
    for n in names:
        c = cols[n]
        lines.append(f"{n.ljust(width)}  {c[0]:>24.17g}  {c[-1]:>24.17g}  {abs(c - c[0]).max():>12.3e}")
    lines.append(f"{len(t)} samples, t in [{t[0]:g}, {t[-1]:g}]")
    if (directory / artifacts.FAILED).exists():
        lines.append("FAILED: " + (directory / artifacts.FAILED).read_text(encoding="utf-8").strip())
    script = ["set datafile separator ','", "set key autotitle columnhead", "set xlabel 't'"]
    plots = [f"'{artifacts.DIAGNOSTICS_CSV}' using 1:{i + 2} with lines" for i in range(len(names))]
    script.append("plot " + ", \\\n     ".join(plots))
    (directory / "diagnostics.gp").write_text("\n".join(script) + "\n", encoding="utf-8")
    return "\n".join(lines)


def render(path: Path) -> str:
    """Human-readable rendering of a run directory or result file."""
    if path.is_dir():
        parts = []
        if (path / artifacts.DIAGNOSTICS_CSV).exists():
            parts.append(_trajectory_table(path))
        for f in sorted(path.glob("*.json")):
            if f.name != artifacts.MANIFEST:
                parts.append(render(f))
        if not parts:
            raise FileNotFoundError(f"nothing to report in {path}")
        text = "\n\n".join(parts)
        (path / "report.txt").write_text(text + "\n", encoding="utf-8")
        return text
    data = json.loads(path.read_text(encoding="utf-8"))
    if "decrements" in data:
        rep = ScalingReport.from_dict(data)
        stem = path.with_suffix("")
        Path(f"{stem}.csv").write_text(rep.to_csv(), encoding="utf-8", newline="")
        Path(f"{stem}.gp").write_text(rep.gnuplot_script(Path(f"{stem}.csv").name), encoding="utf-8")
        return rep.to_text()
    if "checks" in data:
        return "\n".join(CheckResult(**c).line() for c in data["checks"])
    if "worst_ratio" in data:
        return BoundReport.from_dict(data).to_text()
    raise ValueError(f"unrecognised result file {path}")


def cmd_report(args) -> int:
    for p in args.paths:
        print(render(p))
    return 0


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "probe": cmd_probe, "sweep": cmd_sweep,
            "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except config.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        if args.command != "report":
            raise
        print(f"report error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
