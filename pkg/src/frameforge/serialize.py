"""JSON and CSV persistence of construction results and profiles.

JSON is written with sorted keys and shortest round-trip float reprs, so equal
runs give byte-identical files.  Exact rationals are ``"p/q"`` strings,
complex numbers ``[re, im]`` and non-finite floats the strings ``"inf"``,
``"-inf"`` and ``"nan"``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .basis import Approximation
from .config import RunConfig
from .correction import CorrectionBundle
from .errors import FrameForgeError
from .exact import fmt_fraction
from .induction import ConstructionResult, InductionStep, assemble, perturbations
from .intervals import PeriodicIntervalSet
from .report import Check, Report
from .trigpoly import TrigPoly

FORMAT = "frameforge-result"
VERSION = 1


class FormatError(FrameForgeError, ValueError):
    pass


def plain(obj):
    """Recursively convert to JSON-safe builtins."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, Fraction):
        return fmt_fraction(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [plain(float(obj.real)), plain(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def num(x) -> float:
    """Inverse of ``plain`` for scalars."""
    if isinstance(x, str):
        return float(x)
    return float(x)


def cnum(x) -> complex:
    return complex(num(x[0]), num(x[1]))


def dumps(obj) -> str:
    return json.dumps(plain(obj), sort_keys=True, indent=1, ensure_ascii=False, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dumps(obj), encoding="utf-8")
    return p


def read_json(path) -> dict:
    p = Path(path)
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from None


# ---------------------------------------------------------------- reports

def report_from_json(d) -> Report:
    rep = Report()
    for c in d.get("checks", []):
        rep.checks.append(Check(c["name"], num(c["value"]), num(c["bound"]), c["relation"],
                                c.get("note", ""), c["status"] == "waived"))
    return rep


# ---------------------------------------------------------------- results

def _approx_to_json(a: Approximation) -> dict:
    return {
        "Q": a.Q.to_json(),
        "residual": a.residual,
        "n_terms": a.n_terms,
        "reached": a.reached,
        "history": [list(h) for h in a.history],
        "coefficients": a.coefficients if a.coefficients is not None else [],
    }


def _approx_from_json(d) -> Approximation:
    coefs = np.array([cnum(c) for c in d.get("coefficients", [])], dtype=complex)
    hist = [tuple(float(v) if v in ("inf", "-inf", "nan") else v for v in h) for h in d.get("history", [])]
    return Approximation(TrigPoly.from_json(d["Q"]), num(d["residual"]), int(d["n_terms"]),
                         bool(d["reached"]), hist, coefs if len(coefs) else None)


def step_to_json(s: InductionStep) -> dict:
    return {
        "k": s.k, "eta": s.eta, "eps": s.eps, "M": s.M, "nu": s.nu,
        "eps_bounds": s.eps_bounds,
        "measures": s.measures,
        "approximation": _approx_to_json(s.approx),
        "correction": s.bundle.to_json(),
        "E": s.E.to_json(),
    }


def step_from_json(d, gamma_factor: float) -> InductionStep:
    bundle = CorrectionBundle.from_json(d["correction"])
    nu = int(d["nu"])
    E = PeriodicIntervalSet.from_json(d["E"])
    if E != bundle.F.scaled(nu):
        raise FormatError(f"step {d['k']}: stored E does not match F scaled by nu")
    return InductionStep(int(d["k"]), num(d["eta"]), num(d["eps"]), num(d["M"]),
                         _approx_from_json(d["approximation"]), bundle, nu, E,
                         float(gamma_factor),
                         {k: num(v) for k, v in d.get("eps_bounds", {}).items()},
                         {k: num(v) for k, v in d.get("measures", {}).items()})


def result_to_json(result: ConstructionResult, extra: dict | None = None) -> dict:
    """Full result: config, steps, Lambda with provenance, gamma steps and the report."""
    out = {
        "format": FORMAT,
        "version": VERSION,
        "config": {k: v for k, v in result.config.to_json().items() if k != "out"},
        "steps": [step_to_json(s) for s in result.steps],
        "gamma": [{"k": s.k, "E": s.E.to_json(), "factor": s.gamma_factor} for s in result.steps],
        "Lambda": [{"lam": p.lam, "k": p.k, "m": p.m, "n": p.n, "scalar": p.scalar}
                   for p in result.points],
        "grid": result.grid.to_json(),
        "u": result.u.descriptor(),
        "relaxed": result.relaxed,
        "report": result.report.to_json(),
    }
    if extra:
        out.update(extra)
    return out


def result_from_json(d) -> ConstructionResult:
    """Rebuild a result; ``gamma`` and Lambda are recomputed from the stored steps.

    The stored report and relaxations are attached as read; call
    ``induction.recheck`` to recompute them.
    """
    if d.get("format") != FORMAT:
        raise FormatError("not a frameforge result file")
    if int(d.get("version", -1)) != VERSION:
        raise FormatError(f"unsupported result version {d.get('version')}")
    cfg = RunConfig.from_mapping({k: (",".join(str(x) for x in v) if isinstance(v, list) else v)
                                  for k, v in d["config"].items()})
    factors = {int(g["k"]): num(g["factor"]) for g in d.get("gamma", [])}
    missing = [s["k"] for s in d["steps"] if int(s["k"]) not in factors]
    if missing:
        raise FormatError(f"gamma factors missing for steps {missing}")
    steps = [step_from_json(s, factors[int(s["k"])]) for s in d["steps"]]
    result = assemble(cfg, steps)
    stored = [(Fraction(e["lam"]), int(e["k"]), int(e["m"]), int(e["n"])) for e in d.get("Lambda", [])]
    rebuilt = [(p.lam, p.k, p.m, p.n) for p in result.points]
    if stored and stored != rebuilt:
        raise FormatError("stored Lambda does not match the stored steps")
    result.report = report_from_json(d.get("report", {}))
    result.relaxed = list(d.get("relaxed", []))
    return result


def load_result(path) -> ConstructionResult:
    return result_from_json(read_json(path))


# ---------------------------------------------------------------- CSV

def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, Fraction):
        return fmt_fraction(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def write_csv(path, header, rows) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", encoding="utf-8", newline="") as fh:
        fh.write(_csv_text(header, rows))
    return p


def summary_rows(result: ConstructionResult):
    pert = perturbations(result)
    for s, p in zip(result.steps, pert):
        yield (s.k, s.eta, s.eps, s.M, s.nu, s.N, s.bundle.degree, p, s.approx.residual, s.gamma_factor)


SUMMARY_HEADER = ("k", "eta", "eps", "M", "nu", "N", "deg_P", "perturbation", "ls_residual", "gamma_factor")


def export_result(result: ConstructionResult, out, stride: int = 1) -> list[Path]:
    """Summary, residual history, Lambda and grid/density CSVs."""
    out = Path(out)
    files = [write_csv(out / "summary.csv", SUMMARY_HEADER, summary_rows(result))]
    rows = []
    for s in result.steps:
        for h in s.approx.history:
            rows.append((s.k,) + tuple(h))
    files.append(write_csv(out / "residuals.csv", ("k", "N", "residual", "qr_residual", "ne_residual",
                                                   "cond", "method"), rows))
    files.append(write_csv(out / "lambda.csv", ("j", "lam", "k", "m", "n", "scalar_re", "scalar_im"),
                           ((j, p.lam, p.k, p.m, p.n, p.scalar.real, p.scalar.imag)
                            for j, p in enumerate(result.points, 1))))
    t = result.grid.nodes[::stride]
    g = result.gamma(t)
    u = result.u(t)
    files.append(write_csv(out / "grid.csv", ("t", "w0", "u", "gamma", "w"),
                           zip(t, result.w0(t), u, g, u * g**2)))
    return files


def export_profile(path, weighted, translate=None) -> Path:
    """``(j, lam, |c|, error)`` rows for the weighted side and, if given, the translate side."""
    header = ["j", "lam", "abs_c", "error"]
    rows = [list(r) for r in weighted.rows()]
    if translate is not None:
        header += ["abs_c_translate", "error_translate"]
        tr = list(translate.rows())
        for r, t in zip(rows, tr):
            r += [t[2], t[3]]
    return write_csv(path, header, rows)


def export_translate(tframe, out) -> list[Path]:
    """``g`` and the dual images on the x-lattice, plus the descriptor JSON."""
    out = Path(out)
    files = [write_csv(out / "g.csv", ("x", "re", "im"), zip(tframe.x, tframe.g.real, tframe.g.imag))]
    hdr = ["x"]
    for k in range(1, tframe.K + 1):
        hdr += [f"psi{k}_re", f"psi{k}_im"]
    rows = ([x] + [v for k in range(tframe.K) for v in (D[k].real, D[k].imag)]
            for x, D in zip(tframe.x, tframe.dual))
    files.append(write_csv(out / "g_dual.csv", hdr, rows))
    files.append(write_json(out / "translate.json", tframe.to_json()))
    return files
