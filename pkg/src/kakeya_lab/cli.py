"""Command-line front end: ``kakeya-lab <command> [flags]``.

Exit codes: 0 success, 1 a certificate or property was refuted, 2 invalid input.
"""

from __future__ import annotations

import argparse
import sys
import time
from fractions import Fraction

from . import exponents as ex
from .certificate import Certificate
from .configs import ConfigError
from .io import ExperimentConfig, InputError, Report, emit_report, load_instance
from .kakeya_grid import (KINDS, BushBranchError, GridError, PigeonholeError, TwoEndsParams,
                          bush_certificate, concentrated_shading, full_shading, generate_family,
                          maximal_experiment, random_shading, shading_stats, single_point_shading,
                          six_slices_to_sd, stride_shading, two_ends_check, validate_family)
from .sd_engine import (MODES, InstanceError, SdInstance, build_slope_tree, empirical_exponent, extremal_search,
                        iterate_once, pipeline_012inf, pipeline_advanced, pipeline_conviviality, verify_sd)
from .sd_engine.search import DEFAULT_BUDGET
from .slope_field import NuParams, SlopeError, parse_slope, slope_to_json

EXIT_OK, EXIT_REFUTED, EXIT_INVALID = 0, 1, 2
SHADINGS = ("full", "stride", "random", "concentrated", "single")
PIPELINES = ("012inf", "conviviality", "iterate", "advanced")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(f"{self.prog}: {message}")


def _fraction(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _slopes(text, p):
    toks = [t.strip() for t in text.split(",") if t.strip()]
    return [parse_slope(t, p) for t in toks]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    common.add_argument("--threads", type=int, default=1, help="worker count; never changes results")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", default=None, help="write the report here instead of stdout")

    ap = _Parser(prog="kakeya-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("exponents", parents=[common], help="exponent maps and dimension bounds")
    s.add_argument("--n", type=int, help="a single dimension")
    s.add_argument("--n-min", type=int, default=2)
    s.add_argument("--n-max", type=int, default=24)

    s = sub.add_parser("sd-verify", parents=[common], help="check #G <= C (max #pi_r G)^alpha")
    s.add_argument("--input", required=True)
    s.add_argument("--alpha", type=_fraction, default=Fraction(7, 4))
    s.add_argument("--C", type=_fraction, default=Fraction(1))

    s = sub.add_parser("sd-search", parents=[common], help="largest G under a projection cap")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--slopes", required=True, help="comma separated, 'inf' for infinity")
    s.add_argument("--cap", type=int, required=True)
    s.add_argument("--mode", choices=MODES, default="exhaustive")

    s = sub.add_parser("sd-pipeline", parents=[common], help="replay a proof chain on a configuration")
    s.add_argument("--which", choices=PIPELINES, required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--s", default="1", help="nu parameter s (conviviality, iterate)")
    s.add_argument("--slopes", default=None, help="r1,r2 for conviviality; the generic slopes for iterate")
    s.add_argument("--M", type=int, default=2, help="slope tree depth (advanced)")
    s.add_argument("--alpha", type=_fraction, default=None, help="inner exponent (iterate, advanced)")

    for name, hlp in (("grid-validate", "check a line family"), ("grid-bush", "two-slices lower bound"),
                      ("grid-sixslices", "six-slices reduction to an SD instance"),
                      ("grid-maximal", "restricted weak-type ratios")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("--input", default=None, help="line family JSON (generated when absent)")
        s.add_argument("--shading-file", default=None)
        s.add_argument("--kind", choices=KINDS, default="random")
        s.add_argument("--n", type=int, default=2)
        s.add_argument("--N", type=int, default=32)
        s.add_argument("--count", type=int, default=None)
        s.add_argument("--shading", choices=SHADINGS, default="full")
        s.add_argument("--density", type=float, default=0.5)
        s.add_argument("--sigma", type=_fraction, default=Fraction(1, 8))
    return ap


# -- helpers ----------------------------------------------------------------

def _cert_result(cert: Certificate):
    payload = {"certificate": cert.to_json(), "verdict": cert.verdict}
    fail = cert.failing_step()
    if fail is not None:
        payload["failing_step"] = {"desc": fail.desc, "inequality": fail.inequality, "constant": fail.constant}
    return payload, (EXIT_OK if cert.valid else EXIT_REFUTED)


def _family(a):
    if a.input:
        got = load_instance(a.input, a.shading_file)
        if not isinstance(got, tuple):
            raise InputError(f"{a.input}: expected a line family")
        F, Y = got
    else:
        F, Y = generate_family(a.kind, a.n, a.N, a.count, a.seed), None
    if Y is None:
        Y = {"full": full_shading, "stride": stride_shading, "single": single_point_shading,
             "concentrated": concentrated_shading}.get(a.shading, None)
        Y = Y(F) if Y else random_shading(F, a.density, a.seed)
    return F, Y


def _grid_params(a) -> dict:
    return {"input": a.input, "shading_file": a.shading_file, "kind": a.kind, "n": a.n, "N": a.N,
            "count": a.count, "shading": a.shading, "density": a.density, "sigma": a.sigma}


# -- commands -----------------------------------------------------------------

def cmd_exponents(a):
    if a.n is not None:
        row = ex.dimension_bounds(a.n).to_json()
        p, q = ex.maximal_exponents(a.n)
        row["maximal_p_exact"], row["maximal_q_exact"] = str(p), str(q)
        row["advanced_fixed"] = ex.advanced_fixed()
        return {"n": a.n}, row, EXIT_OK
    rows = ex.comparison_table(a.n_min, a.n_max)
    payload = ex.table_json(rows)
    payload["columns"] = list(ex.CSV_COLUMNS)
    return {"n_min": a.n_min, "n_max": a.n_max}, payload, EXIT_OK


def cmd_sd_verify(a):
    inst = load_instance(a.input)
    if not isinstance(inst, SdInstance):
        raise InputError(f"{a.input}: expected an SD instance")
    if not inst.R:
        raise InputError(f"{a.input}: instance has no slopes")
    ok = verify_sd(inst, a.alpha, a.C)
    payload = {"G": len(inst.G), "max_proj": inst.max_proj(), "proj_counts": inst.proj_counts(),
               "alpha": a.alpha, "C": a.C, "holds": ok}
    if inst.max_proj() > 1:
        payload["empirical_exponent"] = empirical_exponent(inst)
    if not ok:
        payload["failing_inequality"] = f"#G = {len(inst.G)} <= {a.C} * {inst.max_proj()}^{a.alpha}"
    return {"input": a.input, "alpha": a.alpha, "C": a.C}, payload, EXIT_OK if ok else EXIT_REFUTED


def cmd_sd_search(a):
    R = _slopes(a.slopes, a.p)
    res = extremal_search(a.p, R, a.cap, a.mode, seed=a.seed, budget=a.budget, threads=a.threads)
    return ({"p": a.p, "slopes": [slope_to_json(r) for r in R], "cap": a.cap, "mode": a.mode},
            res.to_json(), EXIT_OK)


def cmd_sd_pipeline(a):
    inst = load_instance(a.input)
    if not isinstance(inst, SdInstance):
        raise InputError(f"{a.input}: expected a configuration")
    G, p = inst.G, inst.G.p
    params = {"which": a.which, "input": a.input}
    if a.which == "012inf":
        cert = pipeline_012inf(G)
    elif a.which == "advanced":
        tree = build_slope_tree(p, a.M, a.seed)
        params.update(M=a.M)
        cert = pipeline_advanced(G, tree, a.alpha if a.alpha is not None else Fraction(7, 4))
    else:
        if not a.slopes:
            raise InputError(f"--which {a.which} needs --slopes")
        nu = NuParams.model(int(a.s) if p else Fraction(a.s), p)
        rs = _slopes(a.slopes, p)
        params.update(s=a.s, slopes=[slope_to_json(r) for r in rs])
        if a.which == "conviviality":
            if len(rs) != 2:
                raise InputError("conviviality needs exactly two slopes r1,r2")
            cert = pipeline_conviviality(G, nu, rs[0], rs[1])
        else:
            cert = iterate_once(G, nu, rs, a.alpha if a.alpha is not None else 2)
    payload, code = _cert_result(cert)
    return params, payload, code


def cmd_grid_validate(a):
    F, Y = _family(a)
    rep = validate_family(F)
    payload = {"family": rep, "shading": shading_stats(F, Y)}
    return _grid_params(a), payload, EXIT_OK if rep["ok"] else EXIT_REFUTED


def cmd_grid_bush(a):
    F, Y = _family(a)
    te = two_ends_check(F, Y, TwoEndsParams(sigma=a.sigma))
    if not te["ok"]:
        return _grid_params(a), {"two_ends": {k: te[k] for k in ("sigma", "worst", "ok")},
                                 "verdict": "refuted", "failing_step": "two-ends condition"}, EXIT_REFUTED
    payload, code = _cert_result(bush_certificate(F, Y, TwoEndsParams(sigma=a.sigma)))
    return _grid_params(a), payload, code


def cmd_grid_sixslices(a):
    F, Y = _family(a)
    try:
        res = six_slices_to_sd(F, Y, a.seed, TwoEndsParams(sigma=a.sigma))
    except BushBranchError as e:
        return _grid_params(a), {"verdict": "bush_branch", "reason": str(e)}, EXIT_OK
    except PigeonholeError as e:
        return _grid_params(a), {"verdict": "refuted", "failing_step": str(e)}, EXIT_REFUTED
    payload, code = _cert_result(res.certificate)
    payload.update(slices=res.slices, d=res.d, instance=res.instance.to_json(),
                   grid_projection_counts=res.grid_projection_counts,
                   pi_minus1_max_fibre=res.pi_minus1_max_fibre)
    return _grid_params(a), payload, code


def cmd_grid_maximal(a):
    F, Y = _family(a)
    return _grid_params(a), maximal_experiment(F, Y), EXIT_OK


COMMANDS = {
    "exponents": cmd_exponents, "sd-verify": cmd_sd_verify, "sd-search": cmd_sd_search,
    "sd-pipeline": cmd_sd_pipeline, "grid-validate": cmd_grid_validate, "grid-bush": cmd_grid_bush,
    "grid-sixslices": cmd_grid_sixslices, "grid-maximal": cmd_grid_maximal,
}


def run_command(argv) -> tuple[int, Report | None]:
    try:
        a = build_parser().parse_args(argv)
    except SystemExit as e:  # --help
        return int(e.code or 0), None
    except InputError as e:
        print(e, file=sys.stderr)
        return EXIT_INVALID, None
    t0 = time.perf_counter()
    try:
        params, payload, code = COMMANDS[a.command](a)
    except (InputError, ConfigError, InstanceError, SlopeError, GridError, ex.ExponentError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID, None
    cfg = ExperimentConfig(a.command, params, seed=a.seed, budget=a.budget, format=a.format)
    rep = Report(cfg, payload, wall_clock=time.perf_counter() - t0, exit_code=code)
    if a.format == "csv" and a.command == "exponents" and a.n is None:
        text = ex.table_csv(ex.comparison_table(a.n_min, a.n_max))
        if a.output:
            with open(a.output, "w") as fh:
                fh.write(text)
    else:
        text = emit_report(rep, a.format, a.output)
    if not a.output:
        sys.stdout.write(text)
    return code, rep


def main(argv=None) -> int:
    code, _ = run_command(sys.argv[1:] if argv is None else argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
