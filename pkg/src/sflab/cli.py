"""Command-line interface.

Subcommands
-----------
classify       Kodaira type of an integer matrix (JSON)
table          dump the classification table registry (CSV)
fiber-info     summary of a model file (JSON)
metric-eval    semi-flat metric coefficients at a point (JSON)
scan           radial scans: curvature, volume, cone-angle, inj, alh
ma-solve       torus Monge-Ampere solve from a grid file
sobolev-probe  weighted Sobolev-ratio probe (JSON)
verify         run the 13-criterion acceptance suite

Exit codes: 0 success, 1 check failure, 2 input error, 3 numerical failure.
All floating-point output is printed with 17 significant digits and is
byte-identical across runs at a fixed seed.
"""

from __future__ import annotations

import argparse
import cmath
import json
import math
import sys
from typing import List, Optional, Sequence

import numpy as np

from . import acceptance, ma_lab
from .asymptotics import (BaseMetric, alh_circle_length, alh_deviation,
                          alh_mu, ball_volume, cone_angle_numeric,
                          fit_powerlaw, injectivity_proxy_scan,
                          radial_distance, volume_growth_fit)
from .curvature import curvature_decay_scan, theta_norm_sq
from .fiber_models import (FiberModel, TABLE_REGISTRY, cone_angles,
                           generators, load_model, monodromy_consistency,
                           multiplicity_N)
from .semiflat import fiber_flat_data, metric_at
from .sl2z import INFINITE_ORDER, IntMatrix2, classify, invariant_vector_rank


def _fmt(x: float) -> str:
    return "%.17g" % x


def _jnum(x):
    """Floats carried into JSON at full 17-digit precision."""
    return float(_fmt(float(x)))


def _jcomplex(x: complex):
    return [_jnum(x.real), _jnum(x.imag)]


class CheckFailure(Exception):
    pass


def _parse_radii(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) != 4:
        raise ValueError("radii must be given as 'a:b:n:log' or 'a:b:n:lin'")
    a, b = float(parts[0]), float(parts[1])
    n = int(parts[2])
    kind = parts[3]
    if n < 2:
        raise ValueError("radii need at least 2 points")
    if kind == "log":
        if a <= 0 or b <= 0:
            raise ValueError("log spacing needs positive endpoints")
        return np.geomspace(a, b, n)
    if kind == "lin":
        return np.linspace(a, b, n)
    raise ValueError("radii spacing must be 'log' or 'lin'")


def _parse_complex(spec: str) -> complex:
    parts = spec.split(",")
    if len(parts) != 2:
        raise ValueError("expected 're,im'")
    return complex(float(parts[0]), float(parts[1]))


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, obj) -> None:
    _emit(args, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _emit_rows(args, header: Sequence[str], rows: List[List[float]],
               extra=None) -> None:
    if args.format == "json":
        obj = {"columns": list(header),
               "rows": [[_jnum(v) for v in row] for row in rows]}
        if extra:
            obj.update({k: _jnum(v) if isinstance(v, float) else v
                        for k, v in extra.items()})
        _emit_json(args, obj)
    else:
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_fmt(v) for v in row))
        _emit(args, "\n".join(lines) + "\n")


# -- subcommands -------------------------------------------------------------

def cmd_classify(args) -> int:
    A = IntMatrix2(args.a, args.b, args.c, args.d)
    cls = classify(A)
    from .sl2z import order as mat_order
    n = mat_order(A)
    rank, _vec = invariant_vector_rank(A)
    conj = cls.conjugator
    _emit_json(args, {
        "type": str(cls.kodaira_type),
        "order": "inf" if n is INFINITE_ORDER else n,
        "conjugator": None if conj is None
        else [[conj.a, conj.b], [conj.c, conj.d]],
        "invariant_rank": rank,
        "bad_cycles": rank,
    })
    return 0


def cmd_table(args) -> int:
    header = ["j_value", "multiplicity", "type", "order", "generators", "N",
              "theta_incomplete", "theta_complete"]
    lines = [",".join(header)]
    for row in TABLE_REGISTRY:
        lines.append(",".join([
            row.j_value, row.multiplicity, row.type_name, row.order,
            '"%s"' % row.generators_id, str(row.N),
            _fmt(row.theta_incomplete), _fmt(row.theta_complete),
        ]))
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_fiber_info(args) -> int:
    model = load_model(args.model)
    th_inc, th_cmp = cone_angles(model)
    info = {
        "type": str(model.kodaira_type),
        "b": model.b,
        "m": "inf" if math.isinf(model.j_multiplicity)
        else model.j_multiplicity,
        "epsilon": _jnum(model.epsilon),
        "alpha": _jnum(model.alpha),
        "pole_flag": model.pole_flag,
        "N": multiplicity_N(model),
        "theta_incomplete": _jnum(th_inc),
        "theta_complete": _jnum(th_cmp),
        "isotrivial": model.isotrivial,
        "model_coordinate": "u" if model.uses_u_coordinate else "z",
    }
    if args.z is not None:
        z = _parse_complex(args.z)
        s = generators(model, z)
        info["at"] = {
            "z": _jcomplex(z),
            "tau1": _jcomplex(s.tau1),
            "tau2": _jcomplex(s.tau2),
            "pairing": _jnum(s.pairing),
            "monodromy_residual": _jnum(monodromy_consistency(model, z)),
        }
    _emit_json(args, info)
    return 0


def cmd_metric_eval(args) -> int:
    model = load_model(args.model)
    z = _parse_complex(args.z)
    w = _parse_complex(args.w)
    pt = metric_at(model, z, w)
    flat = fiber_flat_data(model, z)
    out = {
        "z": _jcomplex(z),
        "w": _jcomplex(w),
        "A": _jnum(pt.A_coeff),
        "B": _jnum(pt.B_coeff),
        "gamma": _jcomplex(pt.gamma),
        "h_zz": _jnum(pt.matrix.h_zz),
        "h_ww": _jnum(pt.matrix.h_ww),
        "h_zw": _jcomplex(pt.matrix.h_zw),
        "det": _jnum(pt.matrix.det),
        "fiber_area": _jnum(flat.area),
        "fiber_shortest": _jnum(abs(flat.shortest_vector)),
        "fiber_diameter_proxy": _jnum(flat.diameter_proxy),
    }
    if args.check:
        rel = abs(pt.A_coeff * pt.B_coeff - pt.matrix.det) / pt.matrix.det
        area_rel = abs(flat.area - model.epsilon) / model.epsilon
        out["check"] = {"volume_identity_rel": _jnum(rel),
                        "fiber_area_rel": _jnum(area_rel)}
        if rel > 1e-13 or area_rel > 1e-13:
            _emit_json(args, out)
            raise CheckFailure("volume identity / fiber area check failed")
    _emit_json(args, out)
    return 0


def _scan_curvature(args, model: FiberModel) -> int:
    radii = _parse_radii(args.radii)
    base = BaseMetric(model)
    samples = curvature_decay_scan(model, radii)
    rows = []
    for r, smp in zip(radii, samples):
        dist = radial_distance(base, 0.5, r) if r < 0.5 \
            else radial_distance(base, r, 0.5)
        rows.append([dist, r, smp.theta_norm_sq, smp.target, smp.ratio])
    _emit_rows(args, ["r", "z_abs", "theta_sq", "target", "ratio"], rows)
    if args.check:
        last = samples[-1] if radii[-1] < radii[0] else samples[0]
        deep = min(samples, key=lambda s: abs(s.z))
        if deep.target > 0 and not (0.7 <= deep.ratio <= 1.3):
            raise CheckFailure("curvature ratio %.4f out of [0.7, 1.3]"
                               % deep.ratio)
        _ = last
    return 0


def _scan_volume(args, model: FiberModel) -> int:
    radii = _parse_radii(args.radii)
    base = BaseMetric(model)
    rows = [[s, ball_volume(base, s)] for s in radii]
    fit = volume_growth_fit(base, radii)
    _emit_rows(args, ["s", "volume"], rows,
               extra={"exponent": fit.exponent, "r_squared": fit.r_squared})
    if args.check:
        tag = model.kodaira_type.tag
        target = {"I": 4 / 3, "Istar": 2.0}.get(tag, 2.0)
        if abs(fit.exponent - target) > 0.05:
            raise CheckFailure("volume exponent %.4f vs target %.4f"
                               % (fit.exponent, target))
    return 0


def _scan_cone_angle(args, model: FiberModel) -> int:
    radii = _parse_radii(args.radii)
    base = BaseMetric(model)
    th_inc, th_cmp = cone_angles(model)
    target = th_cmp if base.complete else th_inc
    rows = []
    for r in radii:
        theta = cone_angle_numeric(base, r)
        ratio = theta / target if target > 0 else theta
        rows.append([r, theta, target, ratio])
    _emit_rows(args, ["r", "theta", "target", "ratio"], rows)
    if args.check:
        theta = rows[-1][1] if radii[-1] < radii[0] else rows[0][1]
        err = abs(theta - target) / target if target > 0 else abs(theta)
        if err > 0.02:
            raise CheckFailure("cone angle off by %.4f relative" % err)
    return 0


def _scan_inj(args, model: FiberModel) -> int:
    radii = _parse_radii(args.radii)
    base = BaseMetric(model)
    from .asymptotics import _fiber_quantities, _invert_distance
    rows = []
    for s in radii:
        ell = _invert_distance(base, s, math.log(2.0))
        short, diam = _fiber_quantities(model, ell)
        rows.append([s, short, diam])
    fs = injectivity_proxy_scan(model, radii, "shortest")
    fd = injectivity_proxy_scan(model, radii, "diameter")
    _emit_rows(args, ["r", "shortest", "diameter"], rows,
               extra={"shortest_exponent": fs.exponent,
                      "diameter_exponent": fd.exponent})
    if args.check:
        if model.kodaira_type.tag == "I":
            ok = abs(fs.exponent + 1 / 3) <= 0.03 \
                and abs(fd.exponent - 1 / 3) <= 0.03
        else:
            ok = abs(fs.exponent + 1 / 2) <= 0.05
        if not ok:
            raise CheckFailure("injectivity exponents %.4f / %.4f"
                               % (fs.exponent, fd.exponent))
    return 0


def _scan_alh(args, model: FiberModel) -> int:
    ts = _parse_radii(args.radii)
    mu = alh_mu(model)
    rate_target = math.sqrt(model.epsilon) / mu
    rows = [[t, alh_deviation(model, t)] for t in ts]
    lt = np.array([r[0] for r in rows])
    ld = np.log([r[1] for r in rows])
    slope, _ = np.polyfit(lt, ld, 1)
    rate = -slope
    _emit_rows(args, ["t", "deviation"], rows,
               extra={"rate": rate, "rate_target": rate_target,
                      "circle_length": alh_circle_length(model)})
    if args.check:
        if abs(rate - rate_target) > 0.05 * rate_target:
            raise CheckFailure("ALH rate %.5f vs target %.5f"
                               % (rate, rate_target))
    return 0


def cmd_scan(args) -> int:
    model = load_model(args.model)
    fn = {"curvature": _scan_curvature, "volume": _scan_volume,
          "cone-angle": _scan_cone_angle, "inj": _scan_inj,
          "alh": _scan_alh}[args.kind]
    return fn(args, model)


def cmd_ma_solve(args) -> int:
    f, m, n = ma_lab.read_grid(args.problem)
    prob = ma_lab.TorusProblem(m, n, f, epsilon_perturb=args.epsilon,
                               newton_tol=args.tol, max_iters=args.max_iters)
    if args.epsilon > 0:
        sol = ma_lab.solve_perturbed(prob)
    else:
        sol = ma_lab.solve_cma(prob)
    summary = {
        "m": m, "n": n,
        "epsilon": _jnum(args.epsilon),
        "residual_inf": _jnum(sol.residual_inf),
        "iterations": sol.iterations,
        "positivity_margin": _jnum(sol.positivity_margin),
        "u_inf": _jnum(float(np.max(np.abs(sol.u)))),
    }
    if args.solution:
        ma_lab.write_solution(args.solution, sol, m)
        summary["solution"] = args.solution
    _emit_json(args, summary)
    if args.check and sol.residual_inf > prob.newton_tol:
        raise CheckFailure("residual %.3e above tolerance" % sol.residual_inf)
    return 0


def cmd_sobolev_probe(args) -> int:
    rep = ma_lab.sobolev_probe(args.beta, args.alpha)
    _emit_json(args, {
        "beta": _jnum(rep.beta),
        "alpha": _jnum(rep.alpha),
        "ratios": [[_jnum(r) for r in row] for row in rep.ratios],
        "sup_ratio": _jnum(rep.sup_ratio),
        "stability_factor": _jnum(rep.stability_factor),
    })
    if args.check and (not math.isfinite(rep.sup_ratio)
                       or rep.stability_factor > 4):
        raise CheckFailure("Sobolev stability factor %.4f above 4"
                           % rep.stability_factor)
    return 0


def cmd_verify(args) -> int:
    results = acceptance.run_all(
        seed=args.seed,
        report=None if args.json_output
        else lambda r: print(acceptance.format_result(r), flush=True))
    if args.json_output:
        _emit_json(args, [{
            "number": r.number, "name": r.name,
            "measured": _jnum(r.measured), "target": _jnum(r.target),
            "tolerance": _jnum(r.tolerance), "passed": r.passed,
            "detail": r.detail, "seconds": _jnum(r.seconds),
        } for r in results])
    if not all(r.passed for r in results):
        raise CheckFailure("%d acceptance criteria failed"
                           % sum(not r.passed for r in results))
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sflab",
        description="semi-flat Calabi-Yau metric laboratory")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="write output to a file")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="tabular output format")
    common.add_argument("--check", action="store_true",
                        help="verify the computed quantities; exit 1 on fail")
    common.add_argument("--seed", type=int, default=acceptance.DEFAULT_SEED,
                        help="random seed for sampled checks")
    common.add_argument("--threads", type=int, default=1,
                        help="accepted for interface stability; evaluation "
                             "is single-threaded")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("classify", parents=[common],
                       help="Kodaira type of an SL(2,Z) matrix")
    q.add_argument("a", type=int)
    q.add_argument("b", type=int)
    q.add_argument("c", type=int)
    q.add_argument("d", type=int)
    q.set_defaults(fn=cmd_classify)

    q = sub.add_parser("table", parents=[common],
                       help="dump the classification table registry")
    q.set_defaults(fn=cmd_table)

    q = sub.add_parser("fiber-info", parents=[common],
                       help="summary of a model file")
    q.add_argument("model")
    q.add_argument("--z", default=None, help="evaluation point 're,im'")
    q.set_defaults(fn=cmd_fiber_info)

    q = sub.add_parser("metric-eval", parents=[common],
                       help="metric coefficients at a point")
    q.add_argument("model")
    q.add_argument("--z", required=True, help="base point 're,im'")
    q.add_argument("--w", default="0,0", help="fiber point 're,im'")
    q.set_defaults(fn=cmd_metric_eval)

    q = sub.add_parser("scan", parents=[common], help="radial scans")
    q.add_argument("--kind", required=True,
                   choices=("curvature", "volume", "cone-angle", "inj",
                            "alh"))
    q.add_argument("model")
    q.add_argument("--radii", required=True,
                   help="'a:b:n:log' or 'a:b:n:lin'")
    q.set_defaults(fn=cmd_scan)

    q = sub.add_parser("ma-solve", parents=[common],
                       help="solve the torus Monge-Ampere equation")
    q.add_argument("problem", help="grid file with the right-hand side f")
    q.add_argument("--epsilon", type=float, default=0.0,
                   help="zero-order perturbation (0 solves the unperturbed "
                        "equation by a continuity schedule)")
    q.add_argument("--tol", type=float, default=1e-10)
    q.add_argument("--max-iters", type=int, default=60)
    q.add_argument("--solution", default=None,
                   help="write the solution grid (plus .json sidecar) here")
    q.set_defaults(fn=cmd_ma_solve)

    q = sub.add_parser("sobolev-probe", parents=[common],
                       help="weighted Sobolev-ratio probe")
    q.add_argument("--beta", type=float, required=True)
    q.add_argument("--alpha", type=float, required=True)
    q.set_defaults(fn=cmd_sobolev_probe)

    q = sub.add_parser("verify", parents=[common],
                       help="run the acceptance suite")
    q.add_argument("--json", dest="json_output", action="store_true",
                   help="emit a JSON report instead of text lines")
    q.set_defaults(fn=cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CheckFailure as exc:
        print("check failed: %s" % exc, file=sys.stderr)
        return 1
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
