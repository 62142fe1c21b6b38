"""JSONL persistence of continuation branches.

Layout: the first line is the run manifest, every following line one branch
point. Floats are written with 17 significant digits, which round-trips
IEEE doubles exactly.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .continuation import Branch, BranchPoint
from .kernel import KernelSpec
from .spectral import PeriodicFunction, WaveSolution, residual

FORMAT_VERSION = 1
REVALIDATE_SEED = 20240601


class StoreError(RuntimeError):
    pass


class VersionMismatch(StoreError):
    pass


class CorruptRecord(StoreError):
    def __init__(self, path, lineno, reason):
        super().__init__(f"{path}:{lineno}: {reason}")
        self.lineno = lineno


class ResidualMismatch(StoreError):
    pass


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = time.gmtime(int(epoch)) if epoch else time.gmtime()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", t)


@dataclass
class RunManifest:
    r: float
    k: int
    modes: int
    tolerances: dict = field(default_factory=dict)
    seed_eps: float | None = None
    height_floor: float | None = None
    code_version: str = __version__
    timestamp: str = field(default_factory=_timestamp)
    termination: str | None = None
    format_version: int = FORMAT_VERSION

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})


def _fmt(v) -> str:
    """JSON text for scalars, lists and dicts with 17-digit floats."""
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return format(v, ".17g") if math.isfinite(v) else "null"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    raise TypeError(f"cannot serialise {type(v).__name__}")


def stored_residual(sol: WaveSolution, r: float) -> float:
    """Grid sup norm of the residual; the quantity re-validated on load."""
    return residual(sol, KernelSpec(r))[1].residual_norm


def point_record(p: BranchPoint, r: float) -> dict:
    sol = p.solution
    return {"s": p.s, "mu": sol.mu, "height": p.height,
            "residual": stored_residual(sol, r), "coeffs": sol.phi.cos_coeffs,
            "alpha_fit": p.alpha_fit, "modes": sol.modes, "k": sol.k,
            "tolerance": p.tolerance}


def atomic_write_text(path: str, text: str, force: bool = True):
    """Write through a temporary file in the target directory, then rename."""
    path = os.fspath(path)
    if not force and os.path.exists(path):
        raise FileExistsError(f"{path} exists; use --force to overwrite")
    d = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    except OSError as exc:
        raise OSError(f"cannot write to {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_branch(branch: Branch, manifest: RunManifest) -> str:
    lines = [_fmt(asdict(manifest))]
    lines += [_fmt(point_record(p, branch.r)) for p in branch.points]
    return "\n".join(lines) + "\n"


def save_branch(branch: Branch, manifest: RunManifest, path, force: bool = False):
    if manifest.r != branch.r or manifest.k != branch.k:
        raise ValueError("manifest (r, k) does not match the branch")
    atomic_write_text(path, dumps_branch(branch, manifest), force=force)


def _point_from_record(rec: dict, path, lineno: int) -> tuple[BranchPoint, float]:
    try:
        c = np.asarray(rec["coeffs"], dtype=float)
        m = int(rec["modes"])
        if c.size != m // 2:
            raise ValueError(f"{c.size} coefficients for {m} modes")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficient")
        sol = WaveSolution(PeriodicFunction.from_coeffs(c, m), float(rec["mu"]),
                           int(rec["k"]), rec["residual"] if rec["residual"] is not None
                           else float("nan"))
        pt = BranchPoint(float(rec["s"]), sol, float(rec["height"]),
                         float(rec.get("tolerance") or 1e-11), rec.get("alpha_fit"))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptRecord(path, lineno, f"bad branch point ({exc})") from exc
    if abs(pt.height - sol.height) > 1e-9 * max(1.0, abs(sol.mu)):
        raise CorruptRecord(path, lineno, "stored height disagrees with mu - phi(0)")
    return pt, sol.residual_norm


def load_branch(path, revalidate: int = 3) -> tuple[Branch, RunManifest]:
    """Read a branch file; recompute the residual of ``revalidate`` random points."""
    path = os.fspath(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CorruptRecord(path, 1, "empty file")
    try:
        head = json.loads(lines[0])
        manifest = RunManifest.from_dict(head)
    except (json.JSONDecodeError, TypeError) as exc:
        raise CorruptRecord(path, 1, f"bad manifest ({exc})") from exc
    if head.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: format version {head.get('format_version')!r}, "
                              f"expected {FORMAT_VERSION}")
    branch = Branch(manifest.r, manifest.k, termination=manifest.termination)
    stored = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptRecord(path, i, f"invalid JSON ({exc.msg})") from exc
        if not isinstance(rec, dict):
            raise CorruptRecord(path, i, "record is not an object")
        pt, res = _point_from_record(rec, path, i)
        branch.points.append(pt)
        stored.append((i, res))
    if stored and revalidate:
        rng = np.random.default_rng(REVALIDATE_SEED)
        picks = rng.choice(len(stored), size=min(revalidate, len(stored)), replace=False)
        for j in sorted(picks):
            lineno, res = stored[j]
            again = stored_residual(branch.points[j].solution, branch.r)
            if not np.isfinite(res) or abs(again - res) > 1e-12 * max(abs(res), 1e-300):
                raise ResidualMismatch(f"{path}:{lineno}: stored residual {res:.6e}, "
                                       f"recomputed {again:.6e}")
    return branch, manifest
