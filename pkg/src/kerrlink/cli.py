"""Command-line front end: scheme design, protocol simulation, entanglement
scans and feasibility analysis, emitting reproducible CSV/JSON artifacts.

Conventions shared by every subcommand: CSV output is comma-separated with a
'.' decimal point, one header row, and '#'-prefixed parameter echo lines in
front, so each artifact is self-describing.  The same configuration (flags
plus seed) always produces byte-identical output.  Channel loss Lambda is the
relative intensity loss (I0 - I)/I and attenuation_dB = 10 log10(Lambda + 1).

Exit codes: 2 invalid configuration, 3 scheme synthesis failure,
4 truncation overflow, 5 optimizer non-convergence (rows still written,
flagged in the flag column).
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np

from .design import (
    TargetCoefficients,
    build_scheme,
    semi_success_coeffs,
    solve_roots,
    to_json,
)
from .entangle import optimize_coefficients, schmidt_entropy, semi_success_entropy
from .errors import (
    DegenerateLeadingCoefficient,
    DomainError,
    NonConvergence,
    NoSolution,
    TailTooHeavy,
    TruncationOverflow,
)
from .fock import fidelity
from .noise import (
    NoiseParams,
    attenuation_db,
    darkcount_loss_limit,
    feasibility_check,
    fidelity_sweep,
    loss_sweep,
    min_distinguishability,
    practical_cutoff_db,
    probe_ceiling,
)
from .presets import PRESET_NAMES, get_preset
from .protocol import (
    analytic_target_state,
    dominant_eigenstate,
    make_protocol,
    run_full_protocol,
)

DETECTOR_PRESETS = {
    "low-dark": {"zeta": 1e-8, "lambda_det": 1e-2},
    "high-eff": {"zeta": 1e-6, "lambda_det": 1e-1},
}
DB_NOTE = "attenuation_dB = 10*log10(Lambda+1) with Lambda = (I0-I)/I"


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def _parse_floats(text):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_ints(text):
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _emit(args, params, header, rows, preface=""):
    """Write echo lines + header + rows as CSV (or a JSON document)."""
    if args.format == "json":
        doc = {
            "params": {k: (_fmt(v) if isinstance(v, float) else v) for k, v in params},
            "rows": [dict(zip(header, r)) for r in rows],
        }
        text = preface + json.dumps(doc, indent=2) + "\n"
    else:
        lines = [f"# {k} = {_fmt(v)}" for k, v in params]
        lines.append(",".join(header))
        lines.extend(",".join(_fmt(v) for v in row) for row in rows)
        text = preface + "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _resolve(args):
    """Merge preset values with explicit flags into one parameter set."""
    alpha = beta = gamma = chi = delta = target = None
    if args.preset:
        p = get_preset(args.preset)
        alpha, beta, gamma = p.alpha, p.beta, p.gamma
        chi, delta, target = p.chi, p.delta, p.target
    if args.coeffs:
        target = TargetCoefficients(
            np.array([complex(tok) for tok in args.coeffs.split(",")])
        )
    if args.alpha is not None:
        alpha = args.alpha
    if args.beta is not None:
        beta = args.beta
    if args.gamma is not None:
        gamma = args.gamma
    if args.chi is not None:
        chi = args.chi
    if args.delta is not None:
        delta = args.delta
    if beta is None:
        beta = alpha
    if target is None:
        raise ValueError("no target: give --preset or --coeffs")
    if alpha is None or gamma is None or chi is None:
        raise ValueError("alpha, gamma and chi must come from a preset or flags")
    if delta is None:
        delta = 1e-3
    if args.K is not None and _parse_ints(args.K) != [target.K]:
        raise ValueError(f"--K {args.K} does not match the target (K={target.K})")
    return alpha, beta, gamma, chi, delta, target


# ---------------------------------------------------------------------------
# subcommands


def cmd_design(args) -> int:
    alpha, beta, gamma, chi, delta, target = _resolve(args)
    scheme = build_scheme(target, gamma, delta=delta)
    out = [
        f"K = {scheme.K}  gamma = {_fmt(gamma.real) if isinstance(gamma, complex) else _fmt(gamma)}"
        f"  delta = {_fmt(delta)}  q = {_fmt(scheme.q)}",
        "target c: " + ",".join(
            _fmt(v.real) + ("+" if v.imag >= 0 else "") + _fmt(v.imag) + "j"
            for v in target.c
        ),
        "detector,root_re,root_im,mult,abs,arg",
    ]
    for j, (z, mult) in enumerate(scheme.roots.roots, start=1):
        out.append(
            f"{j},{_fmt(z.real)},{_fmt(z.imag)},{mult},"
            f"{_fmt(abs(z))},{_fmt(float(np.angle(z)))}"
        )
    out.append("splitter transmittances T: " + ",".join(_fmt(t) for t in scheme.T))
    out.append(
        "reference amplitudes gtilde: "
        + ",".join(_fmt(g.real) + ("+" if g.imag >= 0 else "") + _fmt(g.imag) + "j"
                   for g in scheme.gtilde)
    )
    net = scheme.ref_net
    out.append("reference cascade Tp: " + (",".join(_fmt(t) for t in net.Tp) or "-"))
    out.append("reference cascade phi: " + (",".join(_fmt(p) for p in net.phi) or "-"))
    out.append(f"master beam: {_fmt(net.master.real)}{net.master.imag:+.12g}j")
    sys.stdout.write("\n".join(out) + "\n")
    if args.out:
        Path(args.out).write_text(to_json(scheme) + "\n")
    return 0


def cmd_simulate(args) -> int:
    alpha, beta, gamma, chi, delta, target = _resolve(args)
    prot = make_protocol(alpha, beta, gamma, chi, target, delta=delta)
    records = run_full_protocol(prot)
    tgt = analytic_target_state(target, alpha, beta, chi, prot.trunc)
    rows = []
    for rec in sorted(records, key=lambda r: r.pattern, reverse=True):
        pat = "".join("1" if b else "0" for b in rec.pattern)
        if rec.probability <= 1e-30:
            rows.append((pat, rec.probability, 0.0, 0.0, 0.0))
            continue
        f_target = fidelity(rec.state, tgt)
        _, vec = dominant_eigenstate(rec.state)
        ent = schmidt_entropy(vec)
        missing = {j for j, b in enumerate(rec.pattern, start=1) if not b}
        own = analytic_target_state(
            semi_success_coeffs(target, prot.scheme.roots, missing),
            alpha, beta, chi, prot.trunc,
        )
        rows.append(
            (pat, rec.probability, f_target, ent, 1.0 - fidelity(rec.state, own))
        )
    params = [
        ("subcommand", "simulate"),
        ("preset", args.preset or "-"),
        ("alpha", complex(alpha).real), ("beta", complex(beta).real),
        ("gamma", complex(gamma).real), ("chi", float(chi)),
        ("delta", float(delta)), ("K", target.K),
        ("n_max", prot.trunc.n_max), ("seed", args.seed),
        ("probability_sum", sum(r[1] for r in rows)),
    ]
    header = ("pattern", "probability", "fidelity_vs_target", "entanglement",
              "oracle_residual")
    _emit(args, params, header, rows)
    return 0


def cmd_entangle_scan(args) -> int:
    xs = _parse_floats(args.x_grid) if args.x_grid else [1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0]
    Ks = _parse_ints(args.K) if args.K else [1, 2]
    gamma = args.gamma if args.gamma is not None else 0.1
    rows = []
    flagged = False
    for x in xs:
        a2 = max(10.0, x)
        chi = math.sqrt(x / a2)
        alpha = math.sqrt(a2)
        for K in Ks:
            try:
                rep = optimize_coefficients(K, alpha, alpha, chi, seed=args.seed)
                flag = 0
            except NonConvergence as err:
                rep, flag, flagged = err.best, 1, True
            rows.append((x, K, "full", rep.E, flag))
            t_opt = TargetCoefficients(rep.c_opt)
            roots = solve_roots(t_opt, gamma)
            for r in range(1, K):
                for missing in itertools.combinations(range(1, K + 1), r):
                    ent = semi_success_entropy(
                        t_opt, roots, set(missing), alpha, alpha, chi
                    )
                    rows.append(
                        (x, K, "miss" + "".join(str(j) for j in missing), ent.E, flag)
                    )
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    params = [
        ("subcommand", "entangle-scan"),
        ("x_grid", ",".join(_fmt(x) for x in xs)),
        ("K_list", ",".join(str(k) for k in Ks)),
        ("gamma", float(gamma)), ("seed", args.seed),
        ("alpha_rule", "alpha^2 = max(10, x), chi = sqrt(x)/alpha"),
    ]
    _emit(args, params, ("x", "K", "pattern", "E", "flag"), rows)
    return 5 if flagged else 0


def cmd_feasibility(args) -> int:
    det = DETECTOR_PRESETS[args.detector]
    zeta = args.zeta if args.zeta is not None else det["zeta"]
    lam_det = args.lambda_det if args.lambda_det is not None else det["lambda_det"]
    f_target = args.f_target
    eps = args.epsilon if args.epsilon is not None else (1.0 - f_target) / 6.0
    alpha = args.alpha if args.alpha is not None else math.sqrt(10.0)
    a2 = abs(alpha) ** 2
    Ks = _parse_ints(args.K) if args.K else [1, 2]
    dphi2 = args.dphi2

    report = [f"feasibility: eps = {_fmt(eps)}  F_target = {_fmt(f_target)}  "
              f"zeta = {_fmt(zeta)}  lambda_det = {_fmt(lam_det)}  |alpha|^2 = {_fmt(a2)}"]
    for K in Ks:
        x_op = min_distinguishability(K, eps, dphi2)
        chi = args.chi if args.chi is not None else math.sqrt(x_op / a2)
        g2 = probe_ceiling(eps, max(x_op, a2 * chi**2), args.Lambda)
        gamma = args.gamma if args.gamma is not None else math.sqrt(g2)
        noise = NoiseParams(
            Lambda=args.Lambda, Lambda1=args.Lambda1, Lambda2=args.Lambda2,
            dphi2=dphi2, lambda_det=lam_det, zeta=zeta,
            eps_ac=args.eps_ac, eps_bc=args.eps_bc,
        )
        rep = feasibility_check(noise, alpha, chi, gamma, eps, K)
        report.append(f"K = {K}  (chi = {_fmt(chi)}, |gamma|^2 = {_fmt(abs(gamma) ** 2)})")
        for c in rep.checks:
            word = "PASS" if c.passed else "FAIL"
            report.append(
                f"  {c.name:<20} value = {_fmt(c.value):<18} bound = {_fmt(c.bound):<18}"
                f" margin = {_fmt(c.margin):<18} {word}"
            )
        report.append(
            f"  overall: {'PASS' if rep.all_pass else 'FAIL'};"
            f" max attenuation = {_fmt(rep.max_attenuation_db)} dB"
            f" ({_fmt(rep.max_distance_km)} km at 0.20 dB/km)"
        )
    sys.stdout.write("\n".join(report) + "\n")

    db_grid = _parse_floats(args.db_grid) if args.db_grid else list(np.linspace(0.0, 30.0, 61))
    fixed_dbs = _parse_floats(args.fixed_db)
    f_grid = list(np.linspace(0.5, 0.99, 50))
    rows = []
    cutoffs = []
    for K in Ks:
        wall = attenuation_db(darkcount_loss_limit(eps, lam_det, zeta))
        cutoffs.append((K, wall, practical_cutoff_db(K, eps, lam_det, dphi2)))
        for db, fv, p in loss_sweep(K, db_grid, f_target, lam_det, zeta, dphi2):
            rows.append(("loss", K, db, fv, p))
        for db0 in fixed_dbs:
            for db, fv, p in fidelity_sweep(K, db0, f_grid, lam_det, zeta, dphi2):
                rows.append(("fidelity", K, db, fv, p))
    params = [
        ("subcommand", "feasibility"),
        ("detector", args.detector), ("zeta", zeta), ("lambda_det", lam_det),
        ("F_target", f_target), ("epsilon", eps), ("alpha2", a2),
        ("dphi2", dphi2), ("fixed_dB", ",".join(_fmt(v) for v in fixed_dbs)),
        ("dB_convention", DB_NOTE),
    ] + [
        (f"darkcount_cutoff_dB_K{K}", wall) for K, wall, _ in cutoffs
    ] + [
        (f"practical_cutoff_dB_K{K}", cut) for K, _, cut in cutoffs
    ]
    _emit(args, params, ("sweep", "K", "Lambda_dB", "F", "p_K"), rows)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kerrlink",
        description="Design and simulate elimination-measurement entanglement "
        "schemes for two field modes coupled through a weak cross-Kerr probe.",
        epilog=f"dB convention: {DB_NOTE}.  Presets: {', '.join(PRESET_NAMES)} "
        "(photon-correlated takes its parameters as photon-correlated:s,K).",
    )
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--preset", help="named parameter bundle")
        p.add_argument("--coeffs", help="explicit target c_0,c_1,... (complex allowed)")
        p.add_argument("--alpha", type=float, help="mode a amplitude")
        p.add_argument("--beta", type=float, help="mode b amplitude (default: alpha)")
        p.add_argument("--gamma", type=float, help="probe amplitude")
        p.add_argument("--chi", type=float, help="cross-Kerr phase per photon")
        p.add_argument("--K", help="detector count (list allowed where it scans)")
        p.add_argument("--delta", type=float, help="last-splitter transmittance")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--Lambda", type=float, default=0.0, help="channel loss (I0-I)/I")
        p.add_argument("--Lambda1", type=float, default=0.0, help="Kerr-stage loss")
        p.add_argument("--Lambda2", type=float, default=0.0, help="storage loss")
        p.add_argument("--dphi2", type=float, default=0.0, help="phase noise variance, rad^2")
        p.add_argument("--lambda-det", dest="lambda_det", type=float, default=None,
                       help="detector efficiency in (0, 1]")
        p.add_argument("--zeta", type=float, default=None,
                       help="dark-count probability per detector per window")
        p.add_argument("--eps-ac", dest="eps_ac", type=float, default=0.0,
                       help="relative a-probe nonlinearity error")
        p.add_argument("--eps-bc", dest="eps_bc", type=float, default=0.0,
                       help="relative b-probe nonlinearity error")
        p.add_argument("--epsilon", type=float, default=None,
                       help="per-term infidelity budget (default (1-F)/6)")

    p = sub.add_parser("design", help="synthesize the detection scheme; "
                       "prints the root table, --out writes the scheme JSON")
    common(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", help="full protocol run, one row per click pattern")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("entangle-scan", help="E versus distinguishability x, "
                       "optimal targets plus silent-detector curves")
    common(p)
    p.add_argument("--x-grid", dest="x_grid", help="comma list of x = alpha^2 chi^2")
    p.set_defaults(func=cmd_entangle_scan)

    p = sub.add_parser("feasibility", help="six-inequality report plus "
                       "p_K(Lambda) and p_K(F) sweeps")
    common(p)
    p.add_argument("--detector", choices=tuple(DETECTOR_PRESETS), default="low-dark",
                   help="detector preset: low-dark (zeta=1e-8, lambda=1e-2) "
                   "or high-eff (zeta=1e-6, lambda=0.1)")
    p.add_argument("--f-target", dest="f_target", type=float, default=0.9)
    p.add_argument("--db-grid", dest="db_grid", help="comma list of Lambda_dB")
    p.add_argument("--fixed-db", dest="fixed_db", default="14,28",
                   help="Lambda_dB values for the p_K(F) sweep")
    p.set_defaults(func=cmd_feasibility)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.subcommand == "feasibility" and args.dphi2 == 0.0:
        args.dphi2 = 2.5e-5  # sweep default; zero would put no floor under x
    try:
        return args.func(args)
    except (ValueError, DomainError) as err:
        print(f"invalid configuration: {err}", file=sys.stderr)
        return 2
    except (NoSolution, DegenerateLeadingCoefficient) as err:
        print(f"scheme synthesis failed: {err}", file=sys.stderr)
        return 3
    except (TruncationOverflow, TailTooHeavy) as err:
        print(f"truncation overflow: {err}", file=sys.stderr)
        return 4
    except NonConvergence as err:
        print(f"optimizer did not converge: {err}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
