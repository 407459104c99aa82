"""Command-line surface.

Verbs: validate, semigroup, cocycle-eval, gns, classify, derivation solve,
chi-structure implement, group-gen, coboundary, montecarlo, report.
Exit codes: 0 all checks pass, 1 any check fails, 2 usage error.
"""

import argparse
import json
import sys

import numpy as np

from . import fixtures
from .algebra import (AxiomViolation, ParseError, load_bialgebra,
                      validate_bialgebra, bialgebra_from_dict)
from .cocycle import (Generator, StepFunction, matrix_element,
                      check_cocycle_identity, simplex_series_oracle)
from .convolution import (ConvolutionSemigroup, OperatorMap, functional,
                          load_operator_map)
from .derivations import (DerivationProblem, check_chi_structure,
                          implement_chi_structure, solve_inner)
from .generators import (check_phi1, check_structure_map, gns_construct,
                         check_conditionally_positive)
from .harness import (GroupCocycleData, RunConfig, build_group_generator,
                      compound_poisson_law, group_relation_residuals,
                      psi_blocks, run_report, simulate_compound_poisson,
                      solve_coboundary)


def _c2j(z):
    return [float(np.real(z)), float(np.imag(z))]


def _emit(args, payload):
    text = json.dumps(payload, indent=1, sort_keys=True)
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_algebra(path):
    if path.startswith("fixture:"):
        return fixtures.fixture(path.split(":", 1)[1])
    return load_bialgebra(path)


def _split_top_level(text, sep=","):
    """Split on separators not nested inside brackets."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur:
        parts.append("".join(cur))
    return parts


def _parse_vector(token):
    """A complex vector given as JSON [[re,im],...] or base64 of the same."""
    token = token.strip()
    if not token.startswith("["):
        import base64
        token = base64.b64decode(token).decode()
    data = json.loads(token)
    return np.array([complex(p[0], p[1]) for p in data])


def parse_steps(spec_text, d_noise=None):
    """Step function from 't1:c1,t2:c2,...'; each c is inline JSON or base64."""
    bps = [0.0]
    vals = []
    for piece in _split_top_level(spec_text):
        if not piece:
            continue
        t_str, c_str = piece.split(":", 1)
        bps.append(float(t_str))
        vals.append(_parse_vector(c_str))
    arr = np.stack(vals) if vals else np.zeros((0, d_noise or 1))
    return StepFunction(np.array(bps), arr)


def _functional_from_spec(b, text):
    if text == "counit":
        return functional(b, b.counit)
    if text.startswith("["):
        return functional(b, _parse_vector(text))
    return load_operator_map(text, b)


def cmd_validate(args):
    try:
        with open(args.file, encoding="utf-8") as fh:
            b = bialgebra_from_dict(json.load(fh))
    except (ParseError, json.JSONDecodeError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    results = validate_bialgebra(b, struct_tol=args.tol or 1e-12)
    ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        ok = ok and r.passed
        print(f"{status}  {r.name:<34s} residual {r.residual:.3e}  (tol {r.tol:.0e})")
    return 0 if ok else 1


def cmd_semigroup(args):
    b = _load_algebra(args.bialgebra)
    gamma = load_operator_map(args.generator, b)
    sg = ConvolutionSemigroup(gamma)
    a, bb, n = args.t_grid.split(":")
    grid = np.linspace(float(a), float(bb), int(n))
    rows = []
    for t in grid:
        lam = sg.at(float(t)).as_vector()
        rows.append([float(t)] + [v for z in lam for v in _c2j(z)])
    if (args.format or "csv") == "json":
        _emit(args, {"t_grid": list(map(float, grid)),
                     "rows": rows, "basis": list(b.basis_labels)})
    else:
        header = "t," + ",".join(f"{lbl}_re,{lbl}_im" for lbl in b.basis_labels)
        lines = [header] + [",".join(repr(v) for v in row) for row in rows]
        text = "\n".join(lines)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        else:
            print(text)
    return 0


def cmd_cocycle_eval(args):
    b = _load_algebra(args.bialgebra)
    phi = Generator(b, load_operator_map(args.generator, b).values)
    if args.x.startswith("["):
        x = b.element(_parse_vector(args.x))
    else:
        x = b.basis_element(b.label_index(args.x))
    dn = phi.d_noise
    f = parse_steps(args.f, dn) if args.f else StepFunction.zero(dn, args.t)
    fp = parse_steps(args.fp, dn) if args.fp else StepFunction.zero(dn, args.t)
    value = matrix_element(phi, x, f, fp, args.t)
    checks = {}
    s = 0.5 * args.t
    checks["cocycle_identity"] = check_cocycle_identity(phi, s, args.t - s, f, fp)
    orc, tail = simplex_series_oracle(phi, x, f, fp, args.t, n_max=4)
    checks["oracle_gap"] = abs(value - orc)
    checks["oracle_tail_bound"] = tail
    _emit(args, {"value": _c2j(value), "method": "semigroup-factorization",
                 "residual_checks": checks})
    return 0 if checks["cocycle_identity"] <= (args.tol or 1e-9) else 1


def cmd_gns(args):
    b = _load_algebra(args.bialgebra)
    gamma = load_operator_map(args.gamma, b)
    ok, margin = check_conditionally_positive(gamma)
    if not ok:
        _emit(args, {"error": "not conditionally positive", "margin": margin})
        return 1
    triple, phi = gns_construct(gamma, tol=args.tol)
    payload = {
        "rank": triple.n,
        "pi": [[[_c2j(z) for z in row] for row in m] for m in triple.pi.values],
        "delta": [[_c2j(z) for z in col[:, 0]] for col in triple.delta.values],
        "lambda": [_c2j(z) for z in triple.lam.as_vector()],
        "phi": [[[_c2j(z) for z in row] for row in m] for m in phi.values],
        "residuals": triple.residuals(),
    }
    _emit(args, payload)
    return 0 if triple.max_residual() <= 1e-9 else 1


def cmd_classify(args):
    b = _load_algebra(args.bialgebra)
    phi = Generator(b, load_operator_map(args.generator, b).values)
    struct = check_structure_map(phi)
    phi1 = check_phi1(phi)
    gamma = phi.lam_block()
    cp_ok, margin = check_conditionally_positive(gamma)
    corner_at_one = abs(complex(gamma.as_vector() @ b.unit))
    report = {
        "epsilon_structure": {"residuals": struct,
                              "holds": bool(max(struct.values()) <= 1e-10)},
        "cp_form_phi1": {"residuals": {k: v for k, v in phi1.items() if k != "ok"},
                         "holds": bool(phi1["ok"])},
        "real": {"residual": phi.reality_defect(),
                 "holds": bool(phi.is_real())},
        "unital_corner": {"residual": corner_at_one,
                          "conditionally_positive_margin": margin,
                          "holds": bool(corner_at_one <= 1e-10 and cp_ok)},
    }
    for key, entry in report.items():
        print(f"{'PASS' if entry['holds'] else 'FAIL'}  {key}: "
              + json.dumps({k: v for k, v in entry.items() if k != 'holds'},
                           default=float, sort_keys=True))
    if args.out:
        _emit(args, report)
    return 0


def cmd_derivation_solve(args):
    b = _load_algebra(args.bialgebra)
    with open(args.problem, encoding="utf-8") as fh:
        data = json.load(fh)
    def _map(key):
        vals = np.array([[ [complex(p[0], p[1]) for p in row] for row in m]
                         for m in data[key]])
        return OperatorMap(b, vals)
    problem = DerivationProblem(_map("pi_prime"), _map("pi"), _map("delta"))
    t, residual = solve_inner(problem)
    _emit(args, {"T": [[_c2j(z) for z in row] for row in t],
                 "residual": residual})
    return 0 if residual <= (args.tol or 1e-9) else 1


def cmd_chi_structure(args):
    b = _load_algebra(args.bialgebra)
    phi = load_operator_map(args.phi, b)
    chi = _functional_from_spec(b, args.chi)
    relation = check_chi_structure(phi, chi)
    pi, xi, lam, residuals = implement_chi_structure(phi, chi)
    _emit(args, {"pi": [[[_c2j(z) for z in row] for row in m] for m in pi.values],
                 "xi": [_c2j(z) for z in xi],
                 "lambda": [_c2j(z) for z in lam.as_vector()],
                 "residuals": residuals})
    return 0 if max(residuals.values()) <= 1e-8 else 1


def cmd_group_gen(args):
    with open(args.data, encoding="utf-8") as fh:
        raw = json.load(fh)
    data = GroupCocycleData(
        np.array(raw["table"], dtype=int),
        np.array([[ [complex(p[0], p[1]) for p in row] for row in m]
                  for m in raw["U"]]),
        np.array([[complex(p[0], p[1]) for p in row] for row in raw["xi"]]),
        np.array(raw["lambda"], dtype=float))
    gen = build_group_generator(data)
    res = group_relation_residuals(psi_blocks(data), data.table)
    _emit(args, {"generator": gen.to_dict(), "residuals": res})
    return 0 if max(res.values()) <= 1e-10 else 1


def cmd_coboundary(args):
    with open(args.data, encoding="utf-8") as fh:
        raw = json.load(fh)
    data = GroupCocycleData(
        np.array(raw["table"], dtype=int),
        np.array([[ [complex(p[0], p[1]) for p in row] for row in m]
                  for m in raw["U"]]),
        np.array([[complex(p[0], p[1]) for p in row] for row in raw["xi"]]),
        np.array(raw["lambda"], dtype=float)).validate()
    eta, residuals = solve_coboundary(data)
    if eta is None:
        _emit(args, {"eta": None, "residuals": residuals})
        return 1
    _emit(args, {"eta": [_c2j(z) for z in eta], "residuals": residuals})
    return 0


def cmd_montecarlo(args):
    n = args.order
    table = fixtures.cyclic_table(n)
    b = fixtures.fixture(f"C(Z{n})") if n in (2, 3, 4, 6) else None
    from .algebra import build_function_algebra
    if b is None:
        b = build_function_algebra(table)
    mu = np.array(json.loads(args.mu), dtype=float)
    mc = simulate_compound_poisson(table, args.rate, mu, args.t,
                                   args.samples, args.seed)
    law = compound_poisson_law(b, args.rate, mu, args.t)
    sigmas = np.abs(mc.frequencies - law) / np.maximum(mc.standard_errors, 1e-12)
    payload = mc.to_dict()
    payload.update({"exact_law": law.tolist(), "max_sigmas": float(sigmas.max()),
                    "total_variation": 0.5 * float(np.abs(mc.frequencies - law).sum())})
    _emit(args, payload)
    return 0 if sigmas.max() <= 3.0 else 1


def cmd_report(args):
    config = RunConfig(seed=args.seed, tol=args.tol or 1e-9,
                       n_samples=args.samples, out=args.out)
    report = run_report(config, suite=args.battery)
    print(f"battery {args.battery}: {report['n_cases']} cases, "
          f"{report['n_failures']} failures")
    return 0 if report["all_pass"] else 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS)
    common.add_argument("--out", type=str, default=argparse.SUPPRESS)
    common.add_argument("--format", choices=["json", "csv"],
                        default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="qlevy")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--tol", type=float, default=None)
    parser.add_argument("--out", type=str, default=None)
    parser.add_argument("--format", choices=["json", "csv"], default=None)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("validate", parents=[common],
                       help="check every bialgebra axiom of a file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("semigroup", parents=[common],
                       help="evolve a convolution semigroup on a t-grid")
    p.add_argument("bialgebra")
    p.add_argument("generator")
    p.add_argument("--t-grid", default="0:1:11")
    p.set_defaults(func=cmd_semigroup)

    p = sub.add_parser("cocycle-eval", parents=[common],
                       help="matrix element between exponential vectors")
    p.add_argument("bialgebra")
    p.add_argument("generator")
    p.add_argument("--x", required=True, help="basis label or JSON coords")
    p.add_argument("--f", default=None, help="step function t1:c1,...")
    p.add_argument("--fp", default=None)
    p.add_argument("--t", type=float, required=True)
    p.set_defaults(func=cmd_cocycle_eval)

    p = sub.add_parser("gns", parents=[common],
                       help="GNS reconstruction from a generator functional")
    p.add_argument("bialgebra")
    p.add_argument("gamma")
    p.set_defaults(func=cmd_gns)

    p = sub.add_parser("classify", parents=[common],
                       help="which generator classes a map belongs to")
    p.add_argument("bialgebra")
    p.add_argument("generator")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("derivation", help="derivation utilities")
    dsub = p.add_subparsers(dest="subverb", required=True)
    ps = dsub.add_parser("solve", parents=[common],
                         help="solve the innerness system")
    ps.add_argument("bialgebra")
    ps.add_argument("problem")
    ps.set_defaults(func=cmd_derivation_solve)

    p = sub.add_parser("chi-structure", help="chi-structure map utilities")
    csub = p.add_subparsers(dest="subverb", required=True)
    pc = csub.add_parser("implement", parents=[common],
                         help="recover (pi, xi, lambda)")
    pc.add_argument("bialgebra")
    pc.add_argument("phi")
    pc.add_argument("chi", help="'counit', JSON coords, or a functional file")
    pc.set_defaults(func=cmd_chi_structure)

    p = sub.add_parser("group-gen", parents=[common],
                       help="generator from group cocycle data")
    p.add_argument("data")
    p.set_defaults(func=cmd_group_gen)

    p = sub.add_parser("coboundary", parents=[common],
                       help="solve xi_g = U_g eta - eta")
    p.add_argument("data")
    p.set_defaults(func=cmd_coboundary)

    p = sub.add_parser("montecarlo", parents=[common],
                       help="compound Poisson versus semigroup law")
    p.add_argument("--order", type=int, default=2, help="cyclic group order")
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--mu", type=str, required=True, help="JSON probability vector")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=100000)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("report", parents=[common],
                       help="run a named battery and emit a report")
    p.add_argument("--battery", default="axioms",
                   help="axioms|cocycle|gns|derivations|montecarlo|all")
    p.add_argument("--samples", type=int, default=10000)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, AxiomViolation, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
