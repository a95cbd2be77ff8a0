"""Energy/momentum diagrams for the four bundled nonlinearities.

Writes branch.csv, diagram.csv, qstar.json and diagram.svg per example into
<out>/<name>/ and prints a one-line summary for each.
"""

import argparse
import json
from pathlib import Path

from gnls.artifacts import RunManifest, atomic_write, diagram_svg
from gnls.envelope import compute_diagram
from gnls.nonlinearity import preset


def run(name: str, out: Path) -> str:
    nl = preset(name)
    dg = compute_diagram(nl)
    d = out / name
    man = RunManifest("reproduce_diagrams", nl, {"preset": name})
    rep = dg.curve.q_star_report()
    rep["dp_sign_changes"] = [float(c) for c in dg.branch.dp_sign_changes()]
    rep["certificate"] = dg.certificate.to_dict()
    files = {
        "branch.csv": dg.branch.to_csv(),
        "diagram.csv": dg.curve.to_csv(),
        "qstar.json": json.dumps(rep, indent=2) + "\n",
        "diagram.svg": diagram_svg(dg.branch, dg.curve, title=f"{name}: coeffs {list(nl.coeffs)}"),
    }
    for fname, text in files.items():
        man.add(atomic_write(d / fname, text), d)
    man.write(d)
    line = f"{name:5s} q_*={dg.curve.q_star:.8f} ({dg.curve.q_star_method})"
    if dg.asymptote is not None:
        line += f" c0={dg.asymptote.c0:.12f} E_0={dg.asymptote.intercept:.10f}"
    if rep["dp_sign_changes"]:
        line += f" cusps={rep['dp_sign_changes']}"
    return line


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/diagrams")
    ap.add_argument("names", nargs="*", default=["gp", "fig2", "fig3", "fig4"])
    args = ap.parse_args()
    for name in args.names:
        print(run(name, Path(args.out)))


if __name__ == "__main__":
    main()
