"""Command line entry point.

Subcommands: ``trace``, ``connections``, ``matrix``, ``borel``, ``verify`` and
``hopf``. The process exits with 0 exactly when every checked item passed.
"""
from __future__ import annotations

import argparse
import math
import re
import sys

import numpy as np

from .actions import Action, IndexWindow, ModelKind, critical_points, stokes_phase
from .alien import DEFAULT_WMAX
from .report import (
    ReportBundle,
    RunConfig,
    emit,
    emit_all,
    hopf_report,
    run_model,
    write_path_csv,
)

_ANGLE = re.compile(r"^\s*([+-]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def parse_angle(text: str) -> float:
    """Float, or a multiple of pi such as ``pi/2``, ``-pi``, ``0.5*pi``."""
    try:
        return float(text)
    except ValueError:
        pass
    m = _ANGLE.match(text.lower())
    if not m:
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}")
    coef = m.group(1)
    c = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
    den = float(m.group(2)) if m.group(2) else 1.0
    return c * math.pi / den


def parse_window(text: str) -> tuple[int, int]:
    """``A..B`` (inclusive)."""
    m = re.match(r"^\s*([+-]?\d+)\s*\.\.\s*([+-]?\d+)\s*$", text)
    if not m:
        raise argparse.ArgumentTypeError(f"window must look like A..B, got {text!r}")
    return int(m.group(1)), int(m.group(2))


def parse_hbar(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _global_flags() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--config", help="JSON file with RunConfig fields")
    g.add_argument("--out", help="output directory")
    g.add_argument("--hbar", type=parse_hbar, help="comma-separated hbar grid")
    g.add_argument("--tol-integrate", type=float, dest="tol_integrate")
    g.add_argument("--tol-g", type=float, dest="tol_g")
    g.add_argument("--tol-quad", type=float, dest="tol_quad")
    g.add_argument("--match-eps", type=float, dest="match_eps")
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    p = argparse.ArgumentParser(prog="thimblekit", description=__doc__.splitlines()[0],
                                parents=[common])
    sub = p.add_subparsers(dest="command", required=True)
    models = [m.value for m in ModelKind]

    t = sub.add_parser("trace", parents=[common], help="trace thimbles and duals")
    t.add_argument("--model", choices=models, required=True)
    t.add_argument("--theta", type=parse_angle, default=None)
    t.add_argument("--window", type=parse_window, default=None)

    c = sub.add_parser("connections", parents=[common], help="count connecting trajectories")
    c.add_argument("--model", choices=models, required=True)
    c.add_argument("--window", type=parse_window, default=None)

    m = sub.add_parser("matrix", parents=[common], help="geometric and resurgent jump matrices")
    m.add_argument("--model", choices=models, required=True)
    m.add_argument("--window", type=parse_window, default=None)

    b = sub.add_parser("borel", parents=[common], help="Borel singularities of one saddle")
    b.add_argument("--model", choices=models, required=True)
    b.add_argument("--saddle", default=None)
    b.add_argument("--terms", type=int, default=40)

    v = sub.add_parser("verify", parents=[common], help="full pipeline with report")
    v.add_argument("--model", choices=models, required=True)
    v.add_argument("--window", type=parse_window, default=None)

    h = sub.add_parser("hopf", parents=[common], help="Hopf algebra axiom suite")
    h.add_argument("--wmax", type=int, default=DEFAULT_WMAX)
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    d: dict = {}
    if args.config:
        import json
        with open(args.config) as fh:
            d.update(json.load(fh))
    for key in ("model", "out", "hbar", "tol_integrate", "tol_g", "tol_quad", "match_eps",
                "theta", "window", "terms"):
        val = getattr(args, key, None)
        if val is not None:
            d[key] = val
    d.setdefault("model", "airy")
    return RunConfig.from_dict(d)


def _status(name: str, ok: bool) -> str:
    return f"{'PASS' if ok else 'FAIL'}  {name}"


def _print_items(bundle: ReportBundle) -> None:
    for name in sorted(bundle.passed):
        print(_status(name, bundle.passed[name]))
    for stage, msg in sorted(bundle.verification.get("errors", {}).items()):
        print(f"error in {stage}: {msg}")


def _format_matrix(block: dict) -> str:
    labels, rows = block["basis"], block["entries"]
    cells = [[str(e) for e in r] for r in rows]
    width = max(len(x) for x in labels + [c for r in cells for c in r])
    head = " " * (width + 2) + " ".join(lab.rjust(width) for lab in labels)
    body = [lab.rjust(width) + "  " + " ".join(c.rjust(width) for c in r)
            for lab, r in zip(labels, cells)]
    return "\n".join([head] + body)


def cmd_trace(args, cfg: RunConfig) -> int:
    from .flow import trace_pair

    a = Action(cfg.model)
    theta = stokes_phase(a.kind) + cfg.delta if cfg.theta is None else cfg.theta
    ok = True
    written = 0
    import os
    os.makedirs(cfg.out, exist_ok=True)
    for p in critical_points(a, cfg.index_window):
        pair = trace_pair(a, theta, p)
        for b in "ABCD":
            path = getattr(pair, b)
            cap = path.captured.label if path.captured is not None else "-"
            print(f"{p.label:>6} {b}  points={len(path.z):5d}  end={path.termination:8s}"
                  f"  captured={cap}")
            name = os.path.join(cfg.out, f"trace_{p.label.replace('+', 'plus').replace('-', 'minus')}_{b}.csv")
            write_path_csv(path, name)
            written += 1
            ok &= path.termination != "failed"
    print(f"theta = {theta:.12e}; {written} branch files in {cfg.out}")
    return 0 if ok else 1


def cmd_connections(args, cfg: RunConfig) -> int:
    bundle = run_model(cfg, stages={"connections"})
    for r in bundle.geometric.get("connections", []):
        print(f"{r['source']} -> {r['target']}  branch={r['branch']}  sign={r['sign']:+d}"
              f"  oracle_distance={r['oracle_distance']:.3e}")
    print(f"{len(bundle.geometric.get('connections', []))} connection(s) at theta* = "
          f"{bundle.model['theta_star']:.12e}")
    _print_items(bundle)
    return 0 if bundle.ok else 1


def cmd_matrix(args, cfg: RunConfig) -> int:
    bundle = run_model(cfg, stages={"matrices"})
    for route in ("geometric", "resurgent"):
        for direction in ("minus", "plus"):
            block = getattr(bundle, route).get(direction)
            if block is not None:
                print(f"{route} S_{direction}:")
                print(_format_matrix(block))
    if "residual" in bundle.resurgent:
        print(f"fit rounding residual = {bundle.resurgent['residual']:.3e}")
    _print_items(bundle)
    if cfg.emit_matrices and args.out:
        emit(bundle, "csv_matrices", cfg.out)
    return 0 if bundle.ok else 1


def cmd_borel(args, cfg: RunConfig) -> int:
    from .borel import locate_singularities, model_germ, singularity_record
    from .wall_crossing import wall_basis

    kind = ModelKind(cfg.model)
    labels = [p.label for p in wall_basis(Action(kind), cfg.theta_star, cfg.index_window)]
    saddle = args.saddle or labels[0]
    g = model_germ(kind, saddle, max(args.terms, 2))
    scan = locate_singularities(g, args.terms)
    print(f"{kind.value} {saddle}: [{scan.order}/{scan.order}] Padé of the derivative, "
          f"{len(scan.poles)} retained pole(s)")
    for z in scan.poles[:8]:
        print(f"  pole {z.real:+.9f} {z.imag:+.9f}i  |z| = {abs(z):.9f}")
    try:
        rec = singularity_record(kind, saddle)
    except (KeyError, Exception) as exc:  # no singularity for this saddle on the ray
        print(f"no Stokes data on the positive ray: {exc}")
        return 0 if scan.conclusive else 1
    near = min(scan.poles, key=lambda z: abs(z - rec.omega)) if scan.poles else None
    c = rec.stokes_constant
    print(f"singularity omega = {rec.omega.real:.12g} -> {rec.target}, "
          f"Stokes constant {c.real:+.9f} {c.imag:+.9f}i")
    ok = near is not None and abs(near - rec.omega) <= 1e-3
    print(_status("pade_singularity", ok))
    return 0 if ok else 1


def cmd_verify(args, cfg: RunConfig) -> int:
    bundle = run_model(cfg)
    _print_items(bundle)
    files = emit_all(bundle, cfg)
    print(f"{len(files)} file(s) written to {cfg.out}")
    return 0 if bundle.ok else 1


def cmd_hopf(args) -> int:
    rep = hopf_report(args.wmax)
    for name, ok in rep["checks"].items():
        print(_status(name, ok))
    if args.out:
        import os
        from .report import dumps
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "hopf.json"), "w") as fh:
            fh.write(dumps(rep))
    return 0 if rep["pass"] else 1


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "hopf":
        return cmd_hopf(args)
    try:
        if getattr(args, "window", None) is not None:
            IndexWindow(*args.window)  # validate early
        cfg = config_from_args(args)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    handler = {"trace": cmd_trace, "connections": cmd_connections, "matrix": cmd_matrix,
               "borel": cmd_borel, "verify": cmd_verify}[args.command]
    np.seterr(all="ignore")
    return handler(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
