"""Command-line interface.

Exit codes: 0 = pass, 1 = fail or error, 2 = inconclusive (non-converged).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness, iterated, normality, osc_quad
from .kernels import DomainError, ZeroWaveNumberError, fiber, kernel_from_descriptor

log = logging.getLogger("ibpfourier")


def _kernel(arg: str):
    """Kernel from a JSON string or a path to a JSON file."""
    p = Path(arg)
    text = p.read_text() if p.exists() else arg
    try:
        desc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"--kernel is neither a JSON descriptor nor a readable JSON file: {exc}") from exc
    return kernel_from_descriptor(desc)


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValueError(f"expected comma-separated numbers, got {text!r}") from exc


def _fixed(text: str) -> list:
    out = []
    for part in text.split(","):
        if not part.strip():
            continue
        axis, _, val = part.partition("=")
        axis = axis.strip().lower()
        axis = "xyz".index(axis) if axis in ("x", "y", "z") else int(axis)
        out.append((axis, float(val)))
    return out


def _emit(payload, args, cfg):
    text = payload if isinstance(payload, str) else json.dumps(harness._jsonable(payload), indent=2, sort_keys=True)
    out = args.out or cfg.out
    if out:
        Path(out).write_text(text + "\n")
        log.info("wrote %s", out)
    else:
        print(text)


def _config(args) -> harness.HarnessConfig:
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text())
    for key in ("tol", "seed", "threads", "out"):
        v = getattr(args, key)
        if v is not None:
            base[key] = v
    return harness.HarnessConfig.from_dict(base)


# ---------------------------------------------------------------------------
# verbs

def cmd_certify(args, cfg):
    k = _kernel(args.kernel)
    level = args.level or k.dimension
    probes = normality.ProbeConfig(seed=cfg.seed)
    cert = normality.certify(k, level, probes)
    _emit(cert.to_dict(), args, cfg)
    return 0 if cert.kind != normality.NOT_CERTIFIED else 1


def cmd_transform1d(args, cfg):
    k = _kernel(args.kernel)
    f = fiber(k, _fixed(args.fixed) if args.fixed else [], args.order)
    q = osc_quad.QuadConfig(target_tol=cfg.tol, ibp_depth=args.depth, split_point=args.split)
    r = osc_quad.fourier_integral_1d(f, args.k, q)
    if args.trace:
        harness.emit_plot_data(r, args.trace)
    _emit(r.to_dict(), args, cfg)
    return 0 if r.converged else 2


def cmd_transform(args, cfg):
    k = _kernel(args.kernel)
    kv = _floats(args.k)
    dim = args.dim or k.dimension
    if dim != k.dimension or len(kv) != dim:
        raise ValueError(f"--dim {dim} needs a {dim}D kernel and {dim} wave components")
    icfg = cfg.iterated()
    if dim == 2:
        rep = iterated.full_transform_2d(k, kv[0], kv[1], icfg, monitor=not args.no_monitor)
        labels = {"xy": "F", "yx": "G"}
    elif dim == 3:
        rep = iterated.full_transform_3d(k, *kv, cfg=icfg)
        labels = {c: c for c in "ABCFGH"}
    else:
        raise ValueError("transform needs --dim 2 or 3")
    if args.trace_dir:
        d = Path(args.trace_dir)
        d.mkdir(parents=True, exist_ok=True)
        for label, cname in labels.items():
            harness.emit_plot_data(rep.certificates[cname], d / f"{label}.csv")
    payload = rep.to_dict()
    if args.report:
        Path(args.report).write_text(json.dumps(harness._jsonable(payload), indent=2, sort_keys=True) + "\n")
    _emit(payload, args, cfg)
    if not rep.all_converged:
        return 2
    return 0 if rep.passed else 1


def cmd_oracle(args, cfg):
    k = _kernel(args.kernel)
    boxes = _floats(args.boxes) if args.boxes else list(cfg.oracle_boxes)
    o = harness.oracle_transform_bruteforce(k, _floats(args.k), boxes)
    _emit(o.to_dict(), args, cfg)
    return 0


def cmd_verify(args, cfg):
    rep = harness.verify_lemma(args.suite, cfg)
    _emit(rep.to_json(), args, cfg)
    return rep.exit_code


def cmd_plotdata(args, cfg):
    data = json.loads(Path(args.input).read_text())
    if "trace" in data:
        obj = data
    elif "evidence" in data:
        obj = [(r, v, data["constant"] / r ** data["order"]) for r, v in data["evidence"]]
    else:
        raise ValueError("input JSON has neither a 'trace' nor an 'evidence' field")
    out = args.out or cfg.out
    if not out:
        raise ValueError("plotdata needs --out")
    harness.emit_plot_data(obj, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ibpfourier",
                                description="Regularized Fourier transforms of slowly decaying kernels.")
    p.add_argument("--tol", type=float, default=None, help="target tolerance of the inner transforms")
    p.add_argument("--seed", type=int, default=None, help="seed for randomized probes")
    p.add_argument("--threads", type=int, default=None, help="numba worker threads")
    p.add_argument("--out", default=None, help="write the JSON result here instead of stdout")
    p.add_argument("--config", default=None, help="JSON file with the same keys as the flags")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("certify", help="normality certificate of a kernel")
    s.add_argument("--kernel", required=True)
    s.add_argument("--level", type=int, choices=(2, 3), default=None)
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("transform1d", help="regularized transform of one fiber")
    s.add_argument("--kernel", required=True)
    s.add_argument("--fixed", default="", help="fixed coordinates, e.g. 'y=0.5' or '1=0.5,2=-1'")
    s.add_argument("--k", type=float, required=True)
    s.add_argument("--order", type=int, default=0, help="fiber derivative order")
    s.add_argument("--depth", type=int, default=None, help="integrations by parts (0..3)")
    s.add_argument("--split", type=float, default=0.0, help="split point of the integration range")
    s.add_argument("--trace", default=None, help="CSV file for the convergence trace")
    s.set_defaults(func=cmd_transform1d)

    s = sub.add_parser("transform", help="iterated 2D/3D transform with all orderings")
    s.add_argument("--dim", type=int, choices=(2, 3), default=None)
    s.add_argument("--kernel", required=True)
    s.add_argument("--k", required=True, help="wave vector, e.g. '1,1,1'")
    s.add_argument("--report", default=None, help="also write the report JSON here")
    s.add_argument("--trace-dir", default=None, help="directory for per-ordering decay CSVs")
    s.add_argument("--no-monitor", action="store_true", help="skip the double-limit probe (2D)")
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("oracle", help="expanding-box brute-force reference value")
    s.add_argument("--kernel", required=True)
    s.add_argument("--k", required=True)
    s.add_argument("--boxes", default=None, help="box radii, e.g. '16,32,64'")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("verify", help="run a verification suite")
    s.add_argument("--suite", required=True, choices=harness.SUITES)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("plotdata", help="CSV (radius, value_re, value_im, bound) from a result JSON")
    s.add_argument("--input", required=True)
    s.set_defaults(func=cmd_plotdata)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors are failures; 2 is reserved for inconclusive runs
        return 1 if exc.code == 2 else int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        return int(args.func(args, cfg))
    except ZeroWaveNumberError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, DomainError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
