"""Command-line experiment runner.

Exit status: 0 when every check in the invoked suite passes, 1 on errors or
failed checks, 2 when a divergence verdict is reported.

Randomness: every command derives its streams from the single ``--seed``.
Case ``i`` of the cross-check table uses ``RngStream(seed).substream(i)``;
the extra ``verify-all`` Monte Carlo rows use substreams ``100 + i``.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace

import numpy as np

from . import closed_form as cf
from . import feynman as fy
from . import paths_space as ps
from .config import ConfigError, ExperimentConfig, cylinder_functional, parse_complex
from .kernel_functions import PRESETS, beta_kernel, preset
from .process_sampler import sample_paths, verify_char_functional, write_paths_csv
from .rng import RngStream
from .verification import Row, example_table, functional_corpus, rows_to_csv

EXIT_OK, EXIT_FAIL, EXIT_DIVERGENT = 0, 1, 2
CONTOUR_TOL = 1e-8


class _Parser(argparse.ArgumentParser):
    # exit status 2 is reserved for divergence verdicts
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FAIL, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON experiment config; explicit flags override it")
    p.add_argument("--kernel", choices=sorted(PRESETS), help="kernel preset")
    p.add_argument("--grid", type=int, dest="grid_M", help="number of grid intervals M")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, dest="N", help="Monte Carlo sample count")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", dest="output", help="output file (default: stdout)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="gbmpaths", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", parents=[common], help="write sample paths as CSV")
    p.add_argument("--paths", type=int, default=5, help="number of paths to write")
    sub.add_parser("paths-verify", parents=[common], help="Monte Carlo vs closed form on the worked moment examples")
    sub.add_parser("verify-all", parents=[common], help="every deterministic and Monte Carlo check as one CSV")

    p = sub.add_parser("closed-form", help="closed-form moments")
    csub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    e = csub.add_parser("eval", parents=[common], help="evaluate a moment spec")
    e.add_argument("--spec", required=True, help="moment spec as JSON text or a path to a JSON file")

    p = sub.add_parser("feynman", help="analytic and Feynman integrals")
    fsub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    e = fsub.add_parser("eval", parents=[common], help="evaluate a cylinder functional from --config")
    e.add_argument("--q", type=float, help="Feynman parameter (overrides the config)")
    fsub.add_parser("diverge-demo", parents=[common], help="ratio-test divergence for the 1/m^2 measure")
    c = fsub.add_parser("contour", parents=[common], help="contour residuals of J* on the test corpus")
    c.add_argument("--rect", type=float, nargs=4, metavar=("RE0", "RE1", "IM0", "IM1"),
                   default=(1.0, 2.0, -0.5, 0.5))
    return parser


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    overrides = {k: getattr(args, k) for k in ("kernel", "grid_M", "seed", "N", "workers", "output")
                 if getattr(args, k, None) is not None}
    cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _cplx(v) -> list | float:
    v = complex(v)
    return [v.real, v.imag]


# -- commands -----------------------------------------------------------------


def cmd_sample(args, cfg: ExperimentConfig) -> int:
    kp = cfg.kernel_pair()
    paths = sample_paths(kp, RngStream(cfg.seed), args.paths)
    if cfg.output is None:
        write_paths_csv(sys.stdout, list(paths), kp.grid)
    else:
        with open(cfg.output, "w", newline="") as fh:
            write_paths_csv(fh, list(paths), kp.grid)
    return EXIT_OK


def cmd_paths_verify(args, cfg: ExperimentConfig) -> int:
    rows = example_table(cfg.kernel_pair(), cfg.N, cfg.seed, cfg.workers)
    _emit(rows_to_csv(rows), cfg.output)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL


def extra_rows(cfg: ExperimentConfig) -> list[Row]:
    """Checks beyond the cross-check table: exponential moments, Jacobians, sections, contours."""
    kp = cfg.kernel_pair()
    root = RngStream(cfg.seed)
    rows: list[Row] = []
    w = beta_kernel(0.6 * kp.T, kp) - 0.3 * beta_kernel(0.2 * kp.T, kp)
    for i, rho in enumerate((0.5, 1.0)):
        rep = verify_char_functional(w, rho, kp, cfg.N, root.substream(100 + i))
        rows.append(Row(f"exp_moment.rho={rho}", rep.closed_form, rep.estimate, rep.stderr, rep.z_score, rep.passed))
    for n in (1, 2, 4):
        t = [kp.T * (j + 1) / n for j in range(n)]
        rep = ps.jacobian_check(t, kp, np.linspace(-1.0, 1.0, n))
        rows.append(Row(f"jacobian.n={n}", rep.det_exact, rep.det_fd, None, None, rep.passed))
    times = ps.PathsTuple(tuple(kp.grid.points[[len(kp.grid) // 4, len(kp.grid) // 2, -1]]))
    xs = sample_paths(kp, root.substream(200), times.n)
    back = ps.project(lambda s: ps.polygonal_H(xs, times, kp, s), times)
    exact = all(np.array_equal(b.values, x) for b, x in zip(back, xs))
    rows.append(Row("section.identity", 0.0, 0.0 if exact else 1.0, None, None, exact))
    for i, F in enumerate(functional_corpus(kp, seed=7)):
        rep = fy.contour_analyticity_check(F)
        rows.append(Row(f"contour.corpus{i}", 0.0, rep.abs_residual, None, None, rep.abs_residual <= CONTOUR_TOL))
    return rows


def cmd_verify_all(args, cfg: ExperimentConfig) -> int:
    rows = example_table(cfg.kernel_pair(), cfg.N, cfg.seed, cfg.workers) + extra_rows(cfg)
    _emit(rows_to_csv(rows), cfg.output)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL


def _load_json_arg(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        with open(text) as fh:
            return json.load(fh)


def cmd_closed_form(args, cfg: ExperimentConfig) -> int:
    doc = _load_json_arg(args.spec)
    spec = cf.MomentSpec.from_dict(doc)
    value = spec.evaluate(cfg.kernel_pair())
    out = {"kind": spec.kind, "params": spec.params,
           "value": _cplx(value) if isinstance(value, complex) else float(value)}
    _emit(_json(out), cfg.output)
    return EXIT_OK


def cmd_feynman_eval(args, cfg: ExperimentConfig) -> int:
    if cfg.functional is None:
        raise ConfigError("$.functional", "required for feynman eval")
    kp = cfg.kernel_pair()
    F = cylinder_functional(cfg.functional, kp)
    spec = cfg.functional
    out: dict = {"kernel": kp.name, "m": F.m, "n": F.n, "s": list(F.times.s)}
    status = EXIT_OK
    if "lambda" in spec:
        lam = parse_complex(spec["lambda"], "$.functional.lambda")
        try:
            out["analytic_J"] = {"lambda": _cplx(lam), "value": _cplx(fy.analytic_J(F, lam))}
        except fy.DomainError as exc:
            raise ConfigError("$.functional.lambda", str(exc)) from None
    q = args.q if args.q is not None else spec.get("q", 1.0)
    res = fy.feynman_limit(F, float(q))
    out["feynman"] = res.to_dict()
    if res.divergent:
        status = EXIT_DIVERGENT
    if "q0" in spec:
        r = fy.q0_condition(F, float(spec["q0"]))
        out["q0_condition"] = {"q0": float(spec["q0"]), "member": r.member, "value": r.value
                               if math.isfinite(r.value) else None, "status": r.status}
    _emit(_json(out), cfg.output)
    return status


def diverge_demo_report(M: int = 256) -> dict:
    drifted = preset("drifted", M=M)
    flipped = drifted.scaled_drift(-1.0)
    F = fy.alpha_functional(flipped)
    ga = float(F.g_dot_a[0])
    q = 1.0
    res = fy.feynman_limit(F, q)
    F0 = fy.alpha_functional(preset("wiener", M=M))
    res0 = fy.feynman_limit(F0, q)
    return {
        "measure": "alpha({m}) = 1/m^2, m = 1, 2, ...",
        "q": q,
        "g_dot_a": ga,
        "predicted_ratio_limit": math.exp(-ga / math.sqrt(2.0 * q)),
        "drifted_flipped": res.to_dict(),
        "wiener": res0.to_dict(),
        "zeta2": math.pi**2 / 6.0,
    }


def cmd_diverge_demo(args, cfg: ExperimentConfig) -> int:
    rep = diverge_demo_report(cfg.grid_M)
    _emit(_json(rep), cfg.output)
    return EXIT_DIVERGENT if rep["drifted_flipped"]["status"] == "divergent" else EXIT_FAIL


def cmd_contour(args, cfg: ExperimentConfig) -> int:
    kp = cfg.kernel_pair()
    rect = tuple(args.rect)
    if cfg.functional is not None:
        corpus = [cylinder_functional(cfg.functional, kp)]
    else:
        corpus = functional_corpus(kp, seed=cfg.seed)
    entries = []
    for i, F in enumerate(corpus):
        rep = fy.contour_analyticity_check(F, rect)
        entries.append({"index": i, "m": F.m, "n": F.n, "residual": _cplx(rep.residual),
                        "abs_residual": rep.abs_residual, "pass": rep.abs_residual <= CONTOUR_TOL})
    _emit(_json({"rect": list(rect), "tolerance": CONTOUR_TOL, "results": entries}), cfg.output)
    return EXIT_OK if all(e["pass"] for e in entries) else EXIT_FAIL


def dispatch(args) -> int:
    cfg = load_config(args)
    if args.command == "sample":
        return cmd_sample(args, cfg)
    if args.command == "paths-verify":
        return cmd_paths_verify(args, cfg)
    if args.command == "verify-all":
        return cmd_verify_all(args, cfg)
    if args.command == "closed-form":
        return cmd_closed_form(args, cfg)
    return {"eval": cmd_feynman_eval, "diverge-demo": cmd_diverge_demo, "contour": cmd_contour}[args.action](args, cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return dispatch(args)
    except ConfigError as exc:
        print(f"gbmpaths: config error at {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, OSError, KeyError) as exc:
        print(f"gbmpaths: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
