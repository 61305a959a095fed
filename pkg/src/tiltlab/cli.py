"""Command-line driver: scenario files, catalog listing and report emission.

Scenario files are INI. Example::

    [scenario]
    function = quad
    box = -1,1
    points = 2001
    x_bar = 0
    phi = power:2
    checks = check:slwp, verify:T4.5, tiltmap

    [constants]
    tau = 1
    kappa = 1

    [sweep]
    exponents = -10:10
    r_fractions = 0.5, 0.25, 0.125

A ``check:<kind>`` entry runs the checker when every constant it needs is
in ``[constants]`` and searches otherwise. ``box`` lists ``lo,hi`` per axis
separated by ``;``. Exit status: 0 when every check completed and no
theorem run was INCONSISTENT, 1 on an INCONSISTENT verdict, 2 on a parse
error or an unknown id.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import regularity, wellposed
from .admissible import (FAMILIES, AdmissibleFunction, derivative_function,
                         inverse_derivative_function, parse_admissible)
from .certificate import Certificate, dumps, jsonable
from .conjugate import conjugate_transform, convex_envelope, envelope_dual_box
from .functions import TERM_DOCS, parse_function
from .gridfn import sample_function, to_csv
from .regularity import check_metric_regularity, check_monotone, check_strong_metric_regularity
from .search import KINDS, SweepSpec, search_certificate
from .subdiff import check_condition_6_1, subdifferential_graph
from .theorems import INCONSISTENT, THEOREMS, TheoremInstance, TheoremReport, verify_theorem
from .wellposed import (TiltMapTable, WellPosednessInstance, check_growth_from_slope,
                        check_interiority, check_slwp, check_swlwp, check_tslm,
                        check_weak_tslm, tilt_minimizer_map)

__all__ = ["main", "catalog_entries", "catalog_list", "emit_report", "run_scenario",
           "ScenarioError", "parse_sweep"]

CHECK_KINDS = {
    "slwp": "stable local well-posedness (phi; delta, r, tau, kappa)",
    "tslm": "tilt-stable local minimum (psi; delta, r, tau, kappa)",
    "swlwp": "stable weak local well-posedness (phi; r, gamma, delta, tau, kappa)",
    "weak-tslm": "weak tilt-stable local minimum (psi; r, gamma, delta, tau, kappa)",
    "metric-reg": "metric psi-regularity of the subdifferential (psi; r, tau, kappa)",
    "strong-metric-reg": "strong metric psi-regularity (psi; r, tau, kappa, delta)",
    "growth-from-slope": "slope condition implies growth (psi; r, tau, kappa, delta, alpha)",
    "interiority": "0 interior to the subdifferential image of B(x_bar, eps) (eps)",
    "monotone": "monotonicity of the subdifferential graph",
    "second-order": "second-order condition on the subdifferential graph (psi; kappa, r)",
}

_NEEDS = {
    "slwp": ("delta", "r", "tau", "kappa"),
    "tslm": ("delta", "r", "tau", "kappa"),
    "swlwp": ("r", "gamma", "delta", "tau", "kappa"),
    "weak-tslm": ("r", "gamma", "delta", "tau", "kappa"),
    "metric-reg": ("r", "tau", "kappa"),
    "strong-metric-reg": ("r", "tau", "kappa", "delta"),
    "growth-from-slope": ("r", "tau", "kappa", "delta", "alpha"),
    "interiority": ("eps",),
    "monotone": (),
    "second-order": ("kappa", "r"),
}

EXIT_OK, EXIT_INCONSISTENT, EXIT_USAGE = 0, 1, 2


class ScenarioError(ValueError):
    """Bad configuration or unknown catalog id (exit status 2)."""


# ---------------------------------------------------------------------------
# catalog


def catalog_entries() -> list:
    """``(label, description)`` for every registered id."""
    out = [(f"function:{k}", v) for k, v in TERM_DOCS.items()]
    out += [("admissible:power:2", "t^2"), ("admissible:power:4", "t^4")]
    fam_docs = {"power": "t^p; power:p", "scaled-power": "c t^p; scaled-power:c,p",
                "capped-linear": "min(t, c); capped-linear:c",
                "user-table": "piecewise-linear through (t, value) pairs; user-table:t0,v0,..."}
    out += [(f"admissible-family:{f}", fam_docs[f]) for f in FAMILIES]
    out += [(f"check:{k}", v) for k, v in CHECK_KINDS.items()]
    out += [(f"verify:{k}", v) for k, v in THEOREMS.items()]
    out += [("tiltmap", "tilt-minimizer table (u*, M(u*), min value)")]
    return out


def catalog_list() -> str:
    """One line per registered id."""
    return "".join(f"{label}\t{doc}\n" for label, doc in catalog_entries())


# ---------------------------------------------------------------------------
# parsing helpers


def parse_box(text: str) -> list:
    """``"lo,hi"`` or ``"lo,hi;lo,hi"``; surrounding brackets are ignored."""
    axes = []
    for part in text.replace("[", "").replace("]", "").split(";"):
        vals = [float(v) for v in part.split(",") if v.strip()]
        if len(vals) != 2:
            raise ScenarioError(f"bad box {text!r}: expected lo,hi per axis")
        axes.append(tuple(vals))
    return axes


def _parse_point(text: str) -> tuple:
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def parse_sweep(text: Optional[str] = None, section: Optional[dict] = None) -> SweepSpec:
    """Sweep from ``key=value`` pairs (``;``-separated) or an INI section.

    Keys: ``exponents`` (``a:b``), ``r_fractions``, ``delta_fractions``,
    ``gamma_fractions`` (comma lists) and ``delta_scale``.
    """
    items = dict(section or {})
    if text:
        for part in text.split(";"):
            if not part.strip():
                continue
            k, sep, v = part.partition("=")
            if not sep:
                raise ScenarioError(f"bad sweep entry {part!r}")
            items[k.strip()] = v.strip()
    spec = SweepSpec()
    kw = {}
    try:
        for k, v in items.items():
            if k == "exponents":
                a, _, b = v.partition(":")
                lo, hi = int(a), int(b or a)
                if lo > hi:
                    raise ScenarioError("exponents range is empty")
                kw[k] = tuple(range(lo, hi + 1))
            elif k in ("r_fractions", "delta_fractions", "gamma_fractions"):
                vals = _floats(v)
                if not vals or min(vals) <= 0:
                    raise ScenarioError(f"{k} needs positive values")
                kw[k] = vals
            elif k == "delta_scale":
                kw[k] = float(v)
                if kw[k] <= 0:
                    raise ScenarioError("delta_scale must be positive")
            else:
                raise ScenarioError(f"unknown sweep key {k!r}")
    except ValueError as e:
        if isinstance(e, ScenarioError):
            raise
        raise ScenarioError(f"bad sweep value: {e}") from e
    return replace(spec, **kw)


def _admissible(text: Optional[str]) -> Optional[AdmissibleFunction]:
    if text is None or not str(text).strip():
        return None
    try:
        return parse_admissible(str(text))
    except ValueError as e:
        raise ScenarioError(str(e)) from e


def _function(fid: str):
    try:
        return parse_function(fid)
    except ValueError as e:
        raise ScenarioError(str(e)) from e


# ---------------------------------------------------------------------------
# task execution


class Task:
    """One requested check, resolved against a scenario."""

    def __init__(self, label: str, scenario: dict):
        self.label = label
        self.s = scenario

    def run(self):
        kind, _, arg = self.label.partition(":")
        if kind == "check":
            return run_check(arg, self.s)
        if kind == "verify":
            return run_verify(arg, self.s)
        if kind == "tiltmap":
            return run_tiltmap(self.s)
        raise ScenarioError(f"unknown check {self.label!r}")


def _grid(s: dict):
    spec = _function(s["function"])
    return sample_function(spec, s["box"], s["points"], s["function"])


def _graph(s: dict):
    if len(s["box"]) != 1:
        raise ScenarioError("graph checks are one-dimensional")
    try:
        return subdifferential_graph(s["function"], s["box"][0], s["points"],
                                     focus=(s["x_bar"][0],))
    except ValueError as e:
        raise ScenarioError(str(e)) from e


def _psi_for(s: dict, kind: str):
    if s.get("psi") is not None:
        return s["psi"]
    phi = s.get("phi")
    if phi is None:
        raise ScenarioError(f"{kind} needs psi or phi")
    if kind in ("tslm", "weak-tslm"):
        return inverse_derivative_function(phi)
    return derivative_function(phi)


def run_check(kind: str, s: dict) -> Certificate:
    if kind not in CHECK_KINDS:
        raise ScenarioError(f"unknown check kind {kind!r}")
    c = s["constants"]
    have = all(k in c for k in _NEEDS[kind])
    xb = s["x_bar"]
    if kind in ("slwp", "swlwp", "tslm", "weak-tslm"):
        f = _grid(s)
        phi = s.get("phi")
        psi = _psi_for(s, kind) if kind in ("tslm", "weak-tslm") else None
        if kind in ("slwp", "swlwp") and phi is None:
            raise ScenarioError(f"{kind} needs phi")
        if not have:
            return search_certificate(kind, f, xb, phi=phi, psi=psi, spec=s["sweep"]).certificate
        inst = WellPosednessInstance(f, xb, phi, psi, {k: c[k] for k in _NEEDS[kind]})
        fn = {"slwp": check_slwp, "swlwp": check_swlwp, "tslm": check_tslm,
              "weak-tslm": check_weak_tslm}[kind]
        return fn(inst)
    g = _graph(s)
    center = (xb[0], 0.0)
    if kind == "monotone":
        return check_monotone(g)
    if kind == "interiority":
        if not have:
            raise ScenarioError("interiority needs eps")
        return check_interiority(g, xb[0], c["eps"])
    psi = _psi_for(s, kind)
    if kind in ("metric-reg", "strong-metric-reg"):
        if not have:
            return search_certificate(kind, graph=g, center=center, psi=psi,
                                      spec=s["sweep"]).certificate
        if kind == "metric-reg":
            return check_metric_regularity(g, center, psi, c["tau"], c["kappa"], c["r"])
        return check_strong_metric_regularity(g, center, psi, c["tau"], c["kappa"], c["r"],
                                              c["delta"])
    if not have:
        raise ScenarioError(f"{kind} needs constants {', '.join(_NEEDS[kind])}")
    if kind == "second-order":
        return check_condition_6_1(g, psi, c["kappa"], c["r"], center=center)
    f = _grid(s)
    return check_growth_from_slope(f, g, xb, c["r"], psi, c["tau"], c["kappa"], c["delta"],
                                   c["alpha"])


def run_verify(tid: str, s: dict) -> TheoremReport:
    if tid not in THEOREMS:
        raise ScenarioError(f"unknown theorem id {tid!r}")
    if len(s["box"]) != 1:
        raise ScenarioError("theorem checks are one-dimensional")
    _function(s["function"])
    c = s["constants"]
    inst = TheoremInstance(s["function"], s["box"][0], s["x_bar"][0], s.get("phi"),
                           s.get("psi"), s["points"], c.get("eps"), c.get("kappa"),
                           c.get("r"), s["sweep"])
    try:
        return verify_theorem(tid, inst)
    except ValueError as e:
        raise ScenarioError(str(e)) from e


def run_tiltmap(s: dict) -> TiltMapTable:
    f = _grid(s)
    c = s["constants"]
    lo_hi = s["box"]
    edge = min(min(x - lo, hi - x) for (lo, hi), x in zip(lo_hi, s["x_bar"]))
    r = c.get("r", 0.5 * edge)
    delta = c.get("delta", 0.25 * r)
    return tilt_minimizer_map(f, s["x_bar"], r, delta, int(c.get("dual_points", 41)))


# ---------------------------------------------------------------------------
# reports


def _fmt(v) -> str:
    return repr(float(v))


def _summary_row(item) -> list:
    if isinstance(item, Certificate):
        cons = json.dumps(jsonable(item.constants), sort_keys=True, separators=(",", ":"))
        return [item.kind, item.verdict, _fmt(item.margin), cons]
    if isinstance(item, TheoremReport):
        return [f"verify:{item.theorem}", item.status, "", "{}"]
    raise TypeError(f"cannot summarise {type(item).__name__}")


def tiltmap_csv(table: TiltMapTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    d = table.tilts.shape[1]
    head = ["u"] if d == 1 else [f"u{k}" for k in range(d)]
    head += ["M"] if d == 1 else [f"M{k}" for k in range(d)]
    w.writerow(head + ["min_value"])
    for u, m, v in table.rows():
        w.writerow([_fmt(x) for x in u] + [_fmt(x) for x in m] + [_fmt(v)])
    return buf.getvalue()


def emit_report(items: Sequence, out_dir, labels: Optional[Sequence[str]] = None) -> list:
    """Write ``summary.csv`` plus one JSON (or tilt-map CSV) per item; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = list(labels) if labels is not None else [None] * len(items)
    written = []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "verdict", "margin", "constants"])
    for n, (item, label) in enumerate(zip(items, labels)):
        if isinstance(item, TiltMapTable):
            p = out / f"{n:02d}-tiltmap.csv"
            p.write_text(tiltmap_csv(item))
            written.append(p)
            continue
        w.writerow(_summary_row(item))
        name = item.kind if isinstance(item, Certificate) else f"verify-{item.theorem}"
        p = out / f"{n:02d}-{name}.json"
        p.write_text(dumps(item.to_dict()))
        written.append(p)
    summary = out / "summary.csv"
    summary.write_text(buf.getvalue())
    return [summary] + written


# ---------------------------------------------------------------------------
# scenarios


def load_scenario(path, sweep_text: Optional[str] = None) -> dict:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        read = cp.read(path)
    except configparser.Error as e:
        raise ScenarioError(f"cannot parse {path}: {e}") from e
    if not read:
        raise ScenarioError(f"cannot read {path}")
    if not cp.has_section("scenario"):
        raise ScenarioError("missing [scenario] section")
    sc = cp["scenario"]
    try:
        fid = sc["function"].strip()
        _function(fid)
        box = parse_box(sc.get("box", "-1,1"))
        points = int(sc.get("points", "2001"))
        x_bar = _parse_point(sc.get("x_bar", ",".join("0" for _ in box)))
        checks = [c.strip() for c in sc.get("checks", "").split(",") if c.strip()]
        constants = {}
        if cp.has_section("constants"):
            for k, v in cp["constants"].items():
                constants[k] = float(v)
                if not constants[k] > 0:
                    raise ScenarioError(f"constant {k} must be positive")
    except KeyError as e:
        raise ScenarioError(f"missing key {e}") from e
    except ValueError as e:
        if isinstance(e, ScenarioError):
            raise
        raise ScenarioError(str(e)) from e
    if len(x_bar) != len(box):
        raise ScenarioError("x_bar and box dimensions differ")
    if not checks:
        raise ScenarioError("no checks requested")
    sweep = parse_sweep(sweep_text, dict(cp["sweep"]) if cp.has_section("sweep") else None)
    out_dir = cp.get("output", "dir", fallback=None)
    s = {"function": fid, "box": box, "points": points, "x_bar": x_bar,
         "phi": _admissible(sc.get("phi")), "psi": _admissible(sc.get("psi")),
         "checks": checks, "constants": constants, "sweep": sweep, "out_dir": out_dir}
    for label in checks:
        kind, _, arg = label.partition(":")
        if kind == "check" and arg not in CHECK_KINDS:
            raise ScenarioError(f"unknown check kind {arg!r}")
        if kind == "verify" and arg not in THEOREMS:
            raise ScenarioError(f"unknown theorem id {arg!r}")
        if kind not in ("check", "verify", "tiltmap"):
            raise ScenarioError(f"unknown check {label!r}")
    return s


def _run_tasks(labels, s, parallel: bool) -> list:
    tasks = [Task(label, s) for label in labels]
    if parallel and len(tasks) > 1:
        with ThreadPoolExecutor() as ex:
            return list(ex.map(lambda t: t.run(), tasks))
    return [t.run() for t in tasks]


def run_scenario(path, out_dir=None, parallel: bool = False, sweep_text: Optional[str] = None):
    """Run every check of a scenario file; returns ``(status, items, written paths)``."""
    s = load_scenario(path, sweep_text)
    items = _run_tasks(s["checks"], s, parallel)
    target = out_dir or s["out_dir"] or "tiltlab-out"
    written = emit_report(items, target, s["checks"])
    bad = any(isinstance(i, TheoremReport) and i.status == INCONSISTENT for i in items)
    return (EXIT_INCONSISTENT if bad else EXIT_OK), items, written


def _apply_slack(value: Optional[float]):
    if value is None:
        return
    if not value >= 0:
        raise ScenarioError("slack override must be nonnegative")
    wellposed.REL_FLOOR = value
    regularity.REL_FLOOR = value


# ---------------------------------------------------------------------------
# argparse


def _common(p: argparse.ArgumentParser):
    p.add_argument("--out-dir", default=None, help="directory for reports")
    p.add_argument("--slack-override", type=float, default=None,
                   help="relative slack floor used by the checkers (default 1e-9)")
    p.add_argument("--sweep", default=None,
                   help="sweep spec, e.g. 'exponents=-4:4;r_fractions=0.5,0.25'")
    p.add_argument("--parallel", action="store_true", help="run checks concurrently")


def _fn_args(p: argparse.ArgumentParser):
    p.add_argument("function", help="catalog function id, e.g. quad or abs+quad")
    p.add_argument("box", help="lo,hi per axis separated by ';' (use --box=... style if lo<0)")
    p.add_argument("points", type=int, nargs="?", default=2001)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tiltlab",
                                 description="Tilt stability and well-posedness checks.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("config")
    _common(p)

    sub.add_parser("catalog", help="list catalog ids")

    p = sub.add_parser("conjugate", help="discrete conjugate of a catalog function")
    _fn_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--dual-box", default=None)
    p.add_argument("--dual-points", type=int, default=None)

    p = sub.add_parser("envelope", help="convex envelope of a catalog function")
    _fn_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("tiltmap", help="tilt-minimizer table as CSV")
    _fn_args(p)
    p.add_argument("--x-bar", default="0")
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--dual-points", type=int, default=41)
    p.add_argument("--out", required=True)

    for name, helptext, arg in (("check", "run one checker (search when constants are missing)",
                                 "kind"),
                                ("verify", "check a theorem on an instance", "theorem")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument(arg)
        _fn_args(p)
        p.add_argument("--x-bar", default="0")
        p.add_argument("--phi", default=None)
        p.add_argument("--psi", default=None)
        for c in ("tau", "kappa", "r", "delta", "gamma", "alpha", "eps"):
            p.add_argument(f"--{c}", type=float, default=None)
        _common(p)
    return ap


def _scenario_from_args(a, label: str) -> dict:
    _function(a.function)
    box = parse_box(a.box)
    x_bar = _parse_point(a.x_bar)
    if len(x_bar) != len(box):
        raise ScenarioError("x_bar and box dimensions differ")
    constants = {c: getattr(a, c) for c in ("tau", "kappa", "r", "delta", "gamma", "alpha", "eps")
                 if getattr(a, c) is not None}
    for k, v in constants.items():
        if not v > 0:
            raise ScenarioError(f"constant {k} must be positive")
    return {"function": a.function, "box": box, "points": a.points, "x_bar": x_bar,
            "phi": _admissible(a.phi), "psi": _admissible(a.psi), "checks": [label],
            "constants": constants, "sweep": parse_sweep(a.sweep), "out_dir": a.out_dir}


def _dispatch(a) -> int:
    if a.command == "catalog":
        sys.stdout.write(catalog_list())
        return EXIT_OK
    if a.command == "run":
        _apply_slack(a.slack_override)
        status, items, written = run_scenario(a.config, a.out_dir, a.parallel, a.sweep)
        for i in items:
            sys.stdout.write(_line(i))
        return status
    if a.command in ("conjugate", "envelope"):
        f = _grid({"function": a.function, "box": parse_box(a.box), "points": a.points})
        if a.command == "conjugate":
            dual = parse_box(a.dual_box) if a.dual_box else envelope_dual_box(f)
            out = conjugate_transform(f, dual, a.dual_points or a.points)
        else:
            out = convex_envelope(f)
        to_csv(out, a.out)
        return EXIT_OK
    if a.command == "tiltmap":
        s = {"function": a.function, "box": parse_box(a.box), "points": a.points,
             "x_bar": _parse_point(a.x_bar),
             "constants": {k: v for k, v in (("r", a.r), ("delta", a.delta),
                                             ("dual_points", a.dual_points)) if v is not None}}
        Path(a.out).write_text(tiltmap_csv(run_tiltmap(s)))
        return EXIT_OK
    _apply_slack(a.slack_override)
    label = f"check:{a.kind}" if a.command == "check" else f"verify:{a.theorem}"
    s = _scenario_from_args(a, label)
    item = Task(label, s).run()
    if a.out_dir:
        emit_report([item], a.out_dir, [label])
    sys.stdout.write(_line(item))
    if isinstance(item, TheoremReport) and item.status == INCONSISTENT:
        return EXIT_INCONSISTENT
    return EXIT_OK


def _line(item) -> str:
    if isinstance(item, Certificate):
        return f"{item.kind}\t{item.verdict}\tmargin={item.margin!r}\n"
    if isinstance(item, TheoremReport):
        return f"verify:{item.theorem}\t{item.status}\t{item.detail}\n"
    return f"tiltmap\t{len(item.tilts)} tilts\n"


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return _dispatch(a)
    except ScenarioError as e:
        sys.stderr.write(f"tiltlab: error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
