"""Command-line front end.

Every subcommand writes its artifacts plus a manifest.json into --out, prints
a short summary (or JSON with --json) and returns

    0  success
    1  a hypothesis or --assert threshold failed
    2  usage error or malformed nonlinearity file
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import RunManifest, atomic_write, diagram_svg
from .branch import appendix_a_audit, find_xi_c, reconstruct_profile, scan_branch, speed_grid
from .envelope import black_soliton_energy, compute_diagram
from .errors import GnlsError, InvalidNonlinearity
from .evolution import init_pair, stability_ensemble, step_strang
from .kdv import verify_expansions
from .nonlinearity import PRESETS, Nonlinearity, check_hypotheses, preset, structural_constants

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Run:
    """Collects outputs of one subcommand and writes the manifest at the end."""

    def __init__(self, args, nl: Nonlinearity, params: dict):
        self.args = args
        self.out = Path(args.out)
        self.manifest = RunManifest(args.command, nl, params)

    def write(self, name: str, text: str) -> Path:
        path = atomic_write(self.out / name, text)
        self.manifest.add(path, self.out)
        return path

    def finish(self, summary: dict, lines: list[str], ok: bool = True) -> int:
        self.manifest.write(self.out)
        if self.args.json:
            print(json.dumps(summary, indent=2, default=_jsonable))
        elif not self.args.quiet:
            print("\n".join(lines))
        if self.args.assert_ and not ok:
            return EXIT_FAIL
        return EXIT_OK


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _load_nl(source: str) -> Nonlinearity:
    if source in PRESETS and not Path(source).exists():
        return preset(source)
    return Nonlinearity.load(source)


def _c_grid(args, nl: Nonlinearity) -> np.ndarray:
    c_s = structural_constants(nl).c_s
    if args.c_steps is None and args.c_min is None and args.c_max is None:
        return speed_grid(nl, 200)
    lo = 0.0 if args.c_min is None else args.c_min
    hi = c_s * (1.0 - 1e-3) if args.c_max is None else args.c_max
    return np.linspace(lo, hi, args.c_steps or 200)


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


# ---------------------------------------------------------------- commands


def cmd_check(args, nl):
    rep = check_hypotheses(nl)
    sc = structural_constants(nl, rep)
    run = _Run(args, nl, {})
    d = rep.to_dict()
    d["constants"] = sc._asdict()
    run.write("check.json", json.dumps(d, indent=2, default=_jsonable) + "\n")
    lines = [
        f"c_s={sc.c_s!r} lambda={sc.lam!r} k={sc.k!r} Gamma={sc.Gamma!r}",
        f"H1 {rep.h1_holds}  H2 {rep.h2_holds}  H3 {rep.h3_holds}",
    ]
    run.finish(d, lines)
    return EXIT_OK if rep.all_hold else EXIT_FAIL


def cmd_branch(args, nl):
    grid = _c_grid(args, nl)
    br = scan_branch(nl, grid, rtol=args.tol)
    run = _Run(args, nl, {"c_grid_size": int(grid.size), "c_min": float(grid[0]), "c_max": float(grid[-1]), "tol": args.tol})
    run.write("branch.csv", br.to_csv())
    run.write("branch.json", br.to_json() + "\n")
    lines = [f"{len(br.points)} waves, {len(br.gaps)} gaps, {len(br.failures)} failures"]
    lines += [f"gap ({a!r}, {b!r})" for a, b in br.gaps]
    return run.finish(br.to_dict(), lines, ok=not br.failures or bool(br.gaps))


def cmd_profile(args, nl):
    xi = find_xi_c(nl, args.c)
    pr = reconstruct_profile(nl, args.c, xi, x_max=args.x_max, n=args.n)
    run = _Run(args, nl, {"c": args.c, "x_max": args.x_max, "n": args.n})
    run.write("profile.csv", pr.to_csv())
    d = {"c": args.c, "xi_c": xi, "E": pr.energy(), "p": pr.momentum()}
    return run.finish(d, [f"xi_c={xi!r} E={d['E']!r} p={d['p']!r}"])


def _diagram(args, nl):
    grid = _c_grid(args, nl)
    return compute_diagram(nl, c_grid=grid, n_q=args.q_steps, tol=args.tol), grid


def cmd_diagram(args, nl):
    dg, grid = _diagram(args, nl)
    run = _Run(args, nl, {"c_grid_size": int(grid.size), "q_steps": args.q_steps, "tol": args.tol})
    run.write("branch.csv", dg.branch.to_csv())
    run.write("diagram.csv", dg.curve.to_csv())
    rep = dg.curve.q_star_report()
    rep["dp_sign_changes"] = [float(c) for c in dg.branch.dp_sign_changes()]
    rep["certificate"] = dg.certificate.to_dict()
    run.write("qstar.json", json.dumps(rep, indent=2, default=_jsonable) + "\n")
    if not args.no_svg:
        run.write("diagram.svg", diagram_svg(dg.branch, dg.curve))
    lines = [
        f"E(v_0)={dg.curve.E0!r}",
        f"q_*={dg.curve.q_star!r} ({dg.curve.q_star_method})",
        f"gaps={dg.branch.gaps} cusps={rep['dp_sign_changes']}",
    ]
    if dg.asymptote is not None:
        lines.append(f"asymptote c0={dg.asymptote.c0!r} E_0={dg.asymptote.intercept!r}")
    return run.finish(rep, lines, ok=dg.certificate.q_star_ok)


def cmd_qstar(args, nl):
    dg, grid = _diagram(args, nl)
    run = _Run(args, nl, {"c_grid_size": int(grid.size), "q_steps": args.q_steps, "tol": args.tol})
    rep = dg.curve.q_star_report()
    cert = dg.certificate
    rep["certificate"] = cert.to_dict()
    run.write("qstar.json", json.dumps(rep, indent=2, default=_jsonable) + "\n")
    ok = cert.q_star_ok and cert.lipschitz and cert.concave and cert.monotone and cert.subadditive
    lines = [
        f"q_*={dg.curve.q_star!r} ({dg.curve.q_star_method}) h(q_*)={cert.h_at_q_star!r}",
        f"lipschitz {cert.lipschitz} concave {cert.concave} monotone {cert.monotone} "
        f"subadditive {cert.subadditive} alpha={cert.alpha:.4f}",
    ]
    return run.finish(rep, lines, ok=ok)


def cmd_kdv(args, nl):
    eps = _floats(args.eps)
    rep = verify_expansions(nl, eps)
    run = _Run(args, nl, {"eps": eps})
    run.write("kdv.json", rep.to_json() + "\n")
    lines = [
        f"max |p - p_pred| = {max(abs(r) for r in rep.p_residual):.3e} (ok {rep.momentum_ok})",
        f"energy residual slope = {rep.energy_slope:.4f} (ok {rep.slope_ok})",
    ]
    return run.finish(rep.to_dict(), lines, ok=rep.momentum_ok and rep.slope_ok)


def _drift(vals) -> float:
    v = np.array([x for x in vals if math.isfinite(x)])
    if v.size < 2:
        return math.nan
    return float(np.max(np.abs(v - v[0])) / abs(v[0]))


def cmd_evolve(args, nl):
    pr = reconstruct_profile(nl, args.c, find_xi_c(nl, args.c))
    st = init_pair(pr, args.L, args.N)
    n = int(round(args.T / args.dt))
    every = max(1, int(round(args.every / args.dt)))
    st = step_strang(st, args.dt, n, every, extended=args.extended)
    params = {k: getattr(args, k) for k in ("c", "L", "N", "dt", "T", "every", "extended")}
    run = _Run(args, nl, params)
    run.write("ledger.csv", st.ledger_csv())
    if args.checkpoint:
        run.write("checkpoint.json", json.dumps(st.checkpoint(), default=_jsonable) + "\n")
    dE = _drift([e.E for e in st.ledger])
    dp = _drift([e.p for e in st.ledger])
    d = {"E_drift": dE, "p_drift": dp, "vacuum_crossing": st.vacuum_crossing, "center": st.center}
    ok = dE <= args.e_tol and (math.isnan(dp) or dp <= args.p_tol)
    return run.finish(d, [f"E drift {dE:.3e}  p drift {dp:.3e}  center {st.center:.6f}"], ok=ok)


def cmd_stability(args, nl):
    pr = reconstruct_profile(nl, args.c, find_xi_c(nl, args.c))
    rep = stability_ensemble(pr, n=args.n, amp=args.amp, seed=args.seed, T=args.T, dt=args.dt, L=args.L, N=args.N, A=args.A)
    params = {k: getattr(args, k) for k in ("c", "n", "amp", "seed", "T", "dt", "L", "N", "A")}
    run = _Run(args, nl, params)
    run.write("stability.json", rep.to_json() + "\n")
    lines = [f"seed {m.seed}: d0={m.d0:.4g} sup d={m.d_sup:.4g} ratio={m.ratio:.3f}" for m in rep.members]
    lines.append(f"max ratio {rep.max_ratio:.3f} (threshold {rep.threshold:g})")
    return run.finish(rep.to_dict(), lines, ok=rep.ok)


def cmd_audit(args, nl):
    grid = _c_grid(args, nl) if (args.c_steps or args.c_min is not None or args.c_max is not None) else None
    if grid is None:
        c_s = structural_constants(nl).c_s
        grid = np.linspace(0.0, 0.98 * c_s, 25)
    rows, ok = [], True
    for c in grid:
        try:
            pr = reconstruct_profile(nl, float(c), find_xi_c(nl, float(c)))
        except GnlsError as exc:
            rows.append({"c": float(c), "error": f"{type(exc).__name__}: {exc}"})
            continue
        r = appendix_a_audit(pr, nl)
        ok &= r.ok
        rows.append(r.to_dict())
    run = _Run(args, nl, {"c_grid_size": int(len(grid))})
    run.write("audit.json", json.dumps(rows, indent=2, default=_jsonable) + "\n")
    n_ok = sum(1 for r in rows if r.get("ok"))
    return run.finish({"ok": ok, "profiles": rows}, [f"{n_ok}/{len(rows)} profiles pass"], ok=ok)


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--nl", default="gp", help="nonlinearity JSON file or preset name (default gp)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--json", action="store_true", help="machine-readable summary on stdout")
    common.add_argument("--quiet", action="store_true")
    common.add_argument("--assert", dest="assert_", action="store_true", help="exit 1 if a threshold fails")
    common.add_argument("--seed", type=int, default=7)
    common.add_argument("--tol", type=float, default=1e-10)

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--c-min", type=float)
    grid.add_argument("--c-max", type=float)
    grid.add_argument("--c-steps", type=int)

    p = argparse.ArgumentParser(prog="gnls", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("check", parents=[common], help="hypotheses and structural constants")
    sub.add_parser("branch", parents=[common, grid], help="travelling-wave branch E(c), p(c)")

    sp = sub.add_parser("profile", parents=[common], help="one soliton profile")
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--x-max", type=float)
    sp.add_argument("--n", type=int, default=4001)

    for name, hlp in (("diagram", "energy/momentum diagram"), ("qstar", "critical momentum")):
        sp = sub.add_parser(name, parents=[common, grid], help=hlp)
        sp.add_argument("--q-steps", type=int, default=401)
        if name == "diagram":
            sp.add_argument("--no-svg", action="store_true")

    sp = sub.add_parser("kdv", parents=[common], help="transonic expansions")
    sp.add_argument("--eps", default="0.05,0.1,0.15,0.2")

    sp = sub.add_parser("evolve", parents=[common], help="split-step evolution of a soliton pair")
    sp.add_argument("--c", type=float, default=0.5)
    sp.add_argument("--T", type=float, default=20.0)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--L", type=float, default=64.0)
    sp.add_argument("--N", type=int, default=4096)
    sp.add_argument("--every", type=float, default=1.0, help="ledger cadence in time units")
    sp.add_argument("--extended", action="store_true", help="long double field")
    sp.add_argument("--checkpoint", action="store_true")
    sp.add_argument("--e-tol", type=float, default=1e-8)
    sp.add_argument("--p-tol", type=float, default=1e-7)

    sp = sub.add_parser("stability", parents=[common], help="perturbation ensemble")
    sp.add_argument("--c", type=float, default=0.5)
    sp.add_argument("--n", type=int, default=8)
    sp.add_argument("--amp", type=float, default=0.01)
    sp.add_argument("--T", type=float, default=50.0)
    sp.add_argument("--dt", type=float, default=4e-3)
    sp.add_argument("--L", type=float, default=128.0)
    sp.add_argument("--N", type=int, default=2048)
    sp.add_argument("--A", type=float, default=10.0)

    sub.add_parser("audit", parents=[common, grid], help="a-priori bounds on sampled profiles")
    return p


_COMMANDS = {
    "check": cmd_check,
    "branch": cmd_branch,
    "profile": cmd_profile,
    "diagram": cmd_diagram,
    "qstar": cmd_qstar,
    "kdv": cmd_kdv,
    "evolve": cmd_evolve,
    "stability": cmd_stability,
    "audit": cmd_audit,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        nl = _load_nl(args.nl)
    except (InvalidNonlinearity, OSError) as exc:
        print(f"gnls: cannot read nonlinearity {args.nl!r}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args, nl)
    except (GnlsError, ValueError) as exc:
        print(f"gnls {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
