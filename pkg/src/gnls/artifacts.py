"""Run manifests, atomic file output and a minimal SVG renderer."""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .nonlinearity import Nonlinearity

__all__ = ["RunManifest", "atomic_write", "sha256_file", "diagram_svg"]


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write(path: str | Path, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


@dataclass
class RunManifest:
    command: str
    nl: Nonlinearity
    parameters: dict
    tool_version: str = __version__
    outputs: list[dict] = field(default_factory=list)

    def add(self, path: str | Path, root: str | Path | None = None) -> None:
        """Record path (relative to root when given) with its content hash."""
        name = Path(path).relative_to(root).as_posix() if root is not None else str(path)
        self.outputs.append({"path": name, "sha256": sha256_file(path)})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nl"] = self.nl.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, out_dir: str | Path) -> Path:
        return atomic_write(Path(out_dir) / "manifest.json", self.to_json() + "\n")


# ---------------------------------------------------------------- svg

_W, _H, _PAD = 640, 480, 48


class _Frame:
    def __init__(self, xlo, xhi, ylo, yhi):
        self.xlo, self.xhi = xlo, xhi if xhi > xlo else xlo + 1.0
        self.ylo, self.yhi = ylo, yhi if yhi > ylo else ylo + 1.0

    def __call__(self, x, y):
        sx = _PAD + (x - self.xlo) / (self.xhi - self.xlo) * (_W - 2 * _PAD)
        sy = _H - _PAD - (y - self.ylo) / (self.yhi - self.ylo) * (_H - 2 * _PAD)
        return sx, sy


def _polyline(frame, xs, ys, color, width=1.5, dash=None) -> str:
    pts = [frame(x, y) for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
    if len(pts) < 2:
        return ""
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{extra} '
        f'points="{coords}"/>'
    )


def diagram_svg(branch, curve, title: str = "") -> str:
    """(p, E) branch segments, E_min, the E(v_0) level and, if fitted, the
    gap asymptote with its intersection point."""
    p_all = np.concatenate([branch.p, curve.qs])
    E_all = np.concatenate([branch.E, curve.Emin[np.isfinite(curve.Emin)]])
    xhi = float(np.nanmax(p_all))
    yhi = float(max(np.nanmax(E_all), curve.E0)) * 1.05
    fr = _Frame(0.0, xhi, 0.0, yhi)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        _polyline(fr, [0, xhi, xhi, 0, 0], [0, 0, yhi, yhi, 0], "#999999", 1.0),
    ]
    for seg in branch.segments:
        parts.append(_polyline(fr, branch.p[seg], branch.E[seg], "#1f77b4"))
    parts.append(_polyline(fr, [0, xhi], [curve.E0, curve.E0], "#2ca02c", 1.0, "6,4"))
    parts.append(_polyline(fr, curve.qs, curve.Emin, "#d62728", 2.0))
    a = curve.asymptote
    if a is not None:
        xs = np.array([0.0, xhi])
        parts.append(_polyline(fr, xs, a.c0 * xs + a.intercept, "#ff7f0e", 1.0, "2,3"))
        if math.isfinite(curve.q_star):
            cx, cy = fr(curve.q_star, curve.E0)
            parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="4" fill="#ff7f0e"/>')
    for cj in branch.dp_sign_changes():
        i = int(np.argmin(np.abs(branch.c - cj)))
        cx, cy = fr(branch.p[i], branch.E[i])
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="4" fill="none" stroke="black"/>')
    lx, ly = fr(0.0, 0.0)
    parts.append(f'<text x="{_W / 2:.0f}" y="{_H - 12}" font-size="14">p</text>')
    parts.append(f'<text x="12" y="{_H / 2:.0f}" font-size="14">E</text>')
    parts.append(f'<text x="{lx:.0f}" y="{ly + 16:.0f}" font-size="11">0</text>')
    if title:
        parts.append(f'<text x="{_PAD}" y="28" font-size="14">{title}</text>')
    parts.append("</svg>")
    return "\n".join(p for p in parts if p) + "\n"
