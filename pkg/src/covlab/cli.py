"""Command-line entry point.

Four subcommands: ``check`` runs one theorem checker from a JSON config,
``suite`` runs the randomized corpus battery, ``kernel-dump`` writes a
covariance kernel as CSV, and ``oracle-verify`` reruns the exact discrete
identity battery. All structured output goes through the deterministic
writers in ioutil, so identical invocations produce byte-identical files.

Exit codes: 0 when nothing FAILed (hypothesis failures are not theorem
failures), 1 on any FAIL verdict, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import oracle
from .functions import function_from_json
from .ioutil import (ConfigError, dumps, get_number, kernel_csv_text,
                     load_json, require_keys)
from .kernels import HoeffdingKernel
from .measures import centered_primitive, measure_from_json, unit_weight
from .quadrature import QuadratureSpec
from .theorem_suite import check, run_suite

_CHECK_KEYS = {"measure", "f", "g", "weights", "options", "quadrature",
               "seed", "tolerance"}


def _load_config(path: str, what: str = "config"):
    try:
        return load_json(path)
    except OSError as exc:
        raise ConfigError(what, f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(what, f"{path} is not valid JSON: {exc}")


def _parse_weights(obj, mu):
    if obj is None:
        return None
    if not isinstance(obj, list):
        raise ConfigError("weights", 'expected a list ("unit" or {"a": ...} '
                                     "per coordinate)")
    if len(obj) != mu.dim:
        raise ConfigError("weights",
                          f"got {len(obj)} entries for dimension {mu.dim}")
    out = []
    for k, (entry, factor) in enumerate(zip(obj, mu.factors)):
        ctx = f"weights[{k}]"
        if entry == "unit":
            out.append(unit_weight(factor))
        elif isinstance(entry, dict):
            require_keys(entry, {"a"}, ctx)
            if "a" not in entry:
                raise ConfigError(f"{ctx}.a", "missing required field")
            a_spec = function_from_json(entry["a"], 1, context=f"{ctx}.a")
            try:
                out.append(centered_primitive(
                    factor, a_spec,
                    a_d1=lambda x, s=a_spec: s.gradient(x)[:, 0]))
            except ValueError as exc:
                raise ConfigError(ctx, str(exc))
        else:
            raise ConfigError(ctx, 'expected "unit" or an object with "a"')
    return out


def _parse_options(obj, mu):
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise ConfigError("options", "expected an object")
    options = dict(obj)
    phis = options.get("phis")
    if phis is not None:
        if not isinstance(phis, list):
            raise ConfigError("options.phis", "expected a list of functions")
        options["phis"] = [
            function_from_json(p, 1, context=f"options.phis[{k}]")
            for k, p in enumerate(phis)]
    return options


def _emit(text: str, out_path: str | None, quiet: bool,
          status: str) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
        if not quiet:
            print(status)
    else:
        sys.stdout.write(text)


def _cmd_check(args) -> int:
    cfg = _load_config(args.config)
    if not isinstance(cfg, dict):
        raise ConfigError("config", "expected a JSON object")
    require_keys(cfg, _CHECK_KEYS, "config")
    if "measure" not in cfg:
        raise ConfigError("config.measure", "missing required field")
    mu = measure_from_json(cfg["measure"], context="measure")
    f = None
    g = None
    if cfg.get("f") is not None:
        f = function_from_json(cfg["f"], mu.dim, context="f")
    if cfg.get("g") is not None:
        g = function_from_json(cfg["g"], mu.dim, context="g")
    weights = _parse_weights(cfg.get("weights"), mu)
    options = _parse_options(cfg.get("options"), mu)
    spec = QuadratureSpec.from_json(cfg.get("quadrature", {}))
    seed = args.seed
    if seed is None:
        seed = int(get_number(cfg, "seed", "config", default=0))
    tol = args.tol
    if tol is None and "tolerance" in cfg:
        tol = float(get_number(cfg, "tolerance", "config"))

    report = check(args.theorem, mu, f, g, weights=weights, options=options,
                   spec=spec, seed=seed, tol=tol)
    text = dumps(report.to_json())
    status = (f"{report.theorem_id}: {report.verdict}"
              f" (margin {report.margin}, tolerance {report.tolerance})")
    _emit(text, args.out, args.quiet, status)
    return 1 if report.failed else 0


def _cmd_suite(args) -> int:
    cfg = {}
    if args.config:
        cfg = _load_config(args.config)
        if not isinstance(cfg, dict):
            raise ConfigError("config", "expected a JSON object")
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.tol is not None:
        cfg["tolerance"] = args.tol
    result = run_suite(cfg)
    text = dumps(result.to_json())
    s = result.summary
    status = (f"suite: {s['total']} checks, {s['fail_count']} FAIL, "
              f"seed {s['seed']}")
    _emit(text, args.out, args.quiet, status)
    return result.exit_code


def _cmd_kernel_dump(args) -> int:
    mu = measure_from_json(_load_config(args.measure, "measure"),
                           context="measure")
    if mu.dim != 1:
        raise ConfigError("measure",
                          "kernel-dump needs a one-dimensional measure")
    if args.grid < 2:
        raise ConfigError("grid", f"need at least 2 nodes, got {args.grid}")
    kern = HoeffdingKernel(mu.factors[0])
    xs, ys, values = kern.grid(args.grid)
    text = kernel_csv_text(xs, ys, values)
    status = (f"kernel: {args.grid * args.grid} values on "
              f"[{xs[0]:.6g}, {xs[-1]:.6g}]")
    _emit(text, args.out, args.quiet, status)
    return 0


def _cmd_oracle_verify(args) -> int:
    seed = 42 if args.seed is None else args.seed
    result = oracle.identity_battery(seed=seed)
    text = dumps(result)
    status = (f"oracle: max residual {result['max_residual']:.3e} "
              f"over {result['instances']} instances, {result['verdict']}")
    _emit(text, args.out, args.quiet, status)
    return 0 if result["verdict"] == "PASS" else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covlab",
        description="Numerical checks for covariance identities and "
                    "inequalities on product measures.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=False):
        p.add_argument("--out", help="output path (stdout when omitted)")
        p.add_argument("--seed", type=int, help="seed override")
        p.add_argument("--quiet", action="store_true",
                       help="suppress the status line")
        return p

    p_check = sub.add_parser("check", help="run one theorem checker")
    p_check.add_argument("--theorem", required=True, help="theorem id")
    p_check.add_argument("--config", required=True,
                         help="JSON config with measure, f, g, ...")
    p_check.add_argument("--tol", type=float, help="tolerance override")
    common(p_check)
    p_check.set_defaults(fn=_cmd_check)

    p_suite = sub.add_parser("suite", help="run the randomized corpus suite")
    p_suite.add_argument("--config", help="suite config JSON")
    p_suite.add_argument("--tol", type=float, help="tolerance override")
    common(p_suite)
    p_suite.set_defaults(fn=_cmd_suite)

    p_kern = sub.add_parser("kernel-dump",
                            help="write a covariance kernel grid as CSV")
    p_kern.add_argument("--measure", required=True,
                        help="JSON file with a one-dimensional measure")
    p_kern.add_argument("--grid", type=int, default=200,
                        help="nodes per axis (default 200)")
    common(p_kern)
    p_kern.set_defaults(fn=_cmd_kernel_dump)

    p_oracle = sub.add_parser("oracle-verify",
                              help="rerun the exact discrete identity battery")
    common(p_oracle)
    p_oracle.set_defaults(fn=_cmd_oracle_verify)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
