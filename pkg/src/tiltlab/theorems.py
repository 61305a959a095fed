"""Run antecedent and consequent checkers for the implications and equivalences."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .admissible import (AdmissibleFunction, antiderivative_function, derivative_function,
                         inverse_derivative_function)
from .certificate import Certificate
from .conjugate import convex_envelope
from .functions import parse_function
from .gridfn import GridFunction, add_ball_indicator, sample_function
from .search import SearchResult, SweepSpec, search_certificate
from .subdiff import SetValuedGraph, check_condition_6_1, graph_from_grid, subdifferential_graph
from .wellposed import check_interiority

__all__ = ["THEOREMS", "TheoremInstance", "TheoremReport", "verify_theorem",
           "CONSISTENT", "VACUOUS", "INCONSISTENT"]

CONSISTENT = "CONSISTENT"
VACUOUS = "VACUOUS"
INCONSISTENT = "INCONSISTENT"

THEOREMS = {
    "T3.3": "strong metric phi'_+-regularity of the subdifferential implies phi-SLWP",
    "T3.4": "phi-SLWP implies strong metric phi'-regularity of the envelope subdifferential",
    "P3.6": "phi-SLWP implies 0 is interior to the subdifferential image of small balls",
    "T4.5": "phi-SLWP holds iff (phi')^{-1}-TSLM holds",
    "T5.2": "phi-SLWP holds iff phi-SWLWP holds",
    "C5.3": "SLWP, SWLWP, TSLM and weak TSLM agree; strong regularity implies them",
    "P6.1": "the second-order condition implies metric psi-regularity",
    "C6.2": "the second-order condition implies SLWP with phi the integral of psi",
}


@dataclass(frozen=True)
class TheoremInstance:
    """Data for a theorem check on a one-dimensional catalog function.

    ``phi`` drives the tilt kinds; ``psi`` is needed by the second-order
    checks. ``eps`` fixes the interiority radius (default: ``r/4, r/2, r``
    of the SLWP certificate). ``kappa`` fixes the second-order constant
    (default: the largest passing ``2**-k``, ``k = 0, 2, 4, 6``).
    """

    function: str
    box: tuple
    x_bar: float
    phi: Optional[AdmissibleFunction] = None
    psi: Optional[AdmissibleFunction] = None
    points: int = 2001
    eps: Optional[float] = None
    kappa: Optional[float] = None
    r: Optional[float] = None
    sweep: SweepSpec = field(default_factory=SweepSpec)

    def grid(self) -> GridFunction:
        return sample_function(parse_function(self.function), [tuple(self.box)], self.points,
                               self.function)

    def graph(self) -> SetValuedGraph:
        return subdifferential_graph(self.function, tuple(self.box), self.points,
                                     focus=(self.x_bar,))

    def edge(self) -> float:
        lo, hi = self.box
        return float(min(self.x_bar - lo, hi - self.x_bar))


@dataclass(frozen=True)
class TheoremReport:
    theorem: str
    status: str
    detail: str
    results: dict

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.results.items():
            if isinstance(v, SearchResult):
                out[k] = {"found": v.found, "certificate": v.certificate.to_dict()}
            elif isinstance(v, Certificate):
                out[k] = v.to_dict()
            else:
                out[k] = v
        return {"theorem": self.theorem, "status": self.status, "detail": self.detail,
                "results": out}


def _need(inst: TheoremInstance, *names):
    for n in names:
        if getattr(inst, n) is None:
            raise ValueError(f"theorem instance needs {n}")


def _strict_phi(phi: AdmissibleFunction):
    if not (phi.is_strictly_convex and phi.is_differentiable):
        raise ValueError(f"{phi.name}: needs a differentiable strictly convex phi")


def _implication(tid, ante: bool, cons: bool, results, what: str) -> TheoremReport:
    if not ante:
        return TheoremReport(tid, VACUOUS, f"antecedent not certified ({what})", results)
    if cons:
        return TheoremReport(tid, CONSISTENT, f"antecedent and consequent certified ({what})",
                             results)
    return TheoremReport(tid, INCONSISTENT, f"antecedent certified, consequent refuted ({what})",
                         results)


def _equivalence(tid, a: bool, b: bool, results, what: str) -> TheoremReport:
    if a == b:
        word = "both found" if a else "both-fail"
        return TheoremReport(tid, CONSISTENT, f"{word} ({what})", results)
    return TheoremReport(tid, INCONSISTENT, f"sides disagree ({what})", results)


def _search(kind, inst, f=None, phi=None, psi=None, graph=None):
    if kind in ("metric-reg", "strong-metric-reg"):
        return search_certificate(kind, graph=graph, center=(inst.x_bar, 0.0), psi=psi,
                                  spec=inst.sweep)
    return search_certificate(kind, f, (inst.x_bar,), phi=phi, psi=psi, spec=inst.sweep)


def _is_local_min(f: GridFunction, x_bar: float, r: float) -> bool:
    c = f.coords[:, 0]
    near = np.abs(c - x_bar) <= r
    fb = f.values[f.index_of([x_bar])]
    return bool(np.isfinite(fb) and np.all(f.values[near] >= fb))


def _t33(inst):
    _need(inst, "phi")
    dphi = derivative_function(inst.phi)
    f, g = inst.grid(), inst.graph()
    if not _is_local_min(f, inst.x_bar, inst.edge() / 8):
        return TheoremReport("T3.3", VACUOUS, "x_bar is not a local minimizer", {})
    reg = _search("strong-metric-reg", inst, psi=dphi, graph=g)
    slwp = _search("slwp", inst, f, phi=inst.phi) if reg.found else None
    res = {"strong-metric-reg": reg}
    if slwp is not None:
        res["slwp"] = slwp
    return _implication("T3.3", reg.found, bool(slwp and slwp.found), res,
                        "strong-metric-reg => slwp")


def _t34(inst):
    _need(inst, "phi")
    _strict_phi(inst.phi)
    dphi = derivative_function(inst.phi)
    f = inst.grid()
    slwp = _search("slwp", inst, f, phi=inst.phi)
    res = {"slwp": slwp}
    if not slwp.found:
        return _implication("T3.4", False, False, res, "slwp => envelope regularity")
    r = inst.r or slwp.certificate.constants["r"]
    env = convex_envelope(add_ball_indicator(f, [inst.x_bar], r))
    g = graph_from_grid(env)
    reg = _search("strong-metric-reg", inst, psi=dphi, graph=g)
    res["strong-metric-reg"] = reg
    res["envelope_radius"] = r
    return _implication("T3.4", True, reg.found, res, "slwp => envelope strong-metric-reg")


def _p36(inst):
    _need(inst, "phi")
    f, g = inst.grid(), inst.graph()
    slwp = _search("slwp", inst, f, phi=inst.phi)
    res = {"slwp": slwp}
    if not slwp.found:
        return _implication("P3.6", False, False, res, "slwp => interiority")
    r = slwp.certificate.constants["r"]
    eps_list = [inst.eps] if inst.eps is not None else [r / 4, r / 2, r]
    ok = True
    for k, eps in enumerate(eps_list):
        c = check_interiority(g, inst.x_bar, eps)
        res[f"interiority[{k}]"] = c
        ok = ok and c.passed
    return _implication("P3.6", True, ok, res, "slwp => interiority")


def _t45(inst):
    _need(inst, "phi")
    _strict_phi(inst.phi)
    psi = inst.psi or inverse_derivative_function(inst.phi)
    f = inst.grid()
    a = _search("slwp", inst, f, phi=inst.phi)
    b = _search("tslm", inst, f, psi=psi)
    return _equivalence("T4.5", a.found, b.found, {"slwp": a, "tslm": b}, "slwp <=> tslm")


def _t52(inst):
    _need(inst, "phi")
    _strict_phi(inst.phi)
    f = inst.grid()
    a = _search("slwp", inst, f, phi=inst.phi)
    b = _search("swlwp", inst, f, phi=inst.phi)
    return _equivalence("T5.2", a.found, b.found, {"slwp": a, "swlwp": b}, "slwp <=> swlwp")


def _c53(inst):
    _need(inst, "phi")
    _strict_phi(inst.phi)
    psi = inverse_derivative_function(inst.phi)
    dphi = derivative_function(inst.phi)
    f, g = inst.grid(), inst.graph()
    res = {
        "slwp": _search("slwp", inst, f, phi=inst.phi),
        "swlwp": _search("swlwp", inst, f, phi=inst.phi),
        "tslm": _search("tslm", inst, f, psi=psi),
        "weak-tslm": _search("weak-tslm", inst, f, psi=psi),
        "strong-metric-reg": _search("strong-metric-reg", inst, psi=dphi, graph=g),
        "metric-reg": _search("metric-reg", inst, psi=dphi, graph=g),
    }
    found = {k: v.found for k, v in res.items()}
    core = [found[k] for k in ("slwp", "swlwp", "tslm", "weak-tslm")]
    if len(set(core)) > 1:
        return TheoremReport("C5.3", INCONSISTENT, f"tilt kinds disagree {found}", res)
    if found["strong-metric-reg"] and not (core[0] and found["metric-reg"]):
        return TheoremReport("C5.3", INCONSISTENT,
                             f"strong regularity certified without its consequences {found}", res)
    convex = bool(g.metadata.get("convex", False))
    if convex and len(set(found.values())) > 1:
        return TheoremReport("C5.3", INCONSISTENT, f"convex instance with disagreement {found}", res)
    word = "all found" if core[0] else "tilt kinds all fail"
    return TheoremReport("C5.3", CONSISTENT, f"{word} {found}", res)


def _second_order(inst, g):
    """The second-order check at the instance ``kappa`` or the largest passing ``2**-k``."""
    r = inst.r or inst.edge() / 2
    kappas = [inst.kappa] if inst.kappa is not None else [2.0 ** -k for k in (0, 2, 4, 6)]
    cert = None
    for kappa in kappas:
        cert = check_condition_6_1(g, inst.psi, kappa, r, center=(inst.x_bar, 0.0))
        if cert.passed:
            break
    return cert


def _p61(inst):
    _need(inst, "psi")
    g = inst.graph()
    cond = _second_order(inst, g)
    res = {"second-order": cond}
    if not cond.passed:
        return _implication("P6.1", False, False, res, "second-order => metric-reg")
    reg = _search("metric-reg", inst, psi=inst.psi, graph=g)
    res["metric-reg"] = reg
    return _implication("P6.1", True, reg.found, res, "second-order => metric-reg")


def _c62(inst):
    _need(inst, "psi")
    g = inst.graph()
    if not g.metadata.get("convex", False):
        raise ValueError("C6.2 needs a convex function")
    f = inst.grid()
    if not _is_local_min(f, inst.x_bar, inst.edge()):
        return TheoremReport("C6.2", VACUOUS, "x_bar is not a minimizer", {})
    cond = _second_order(inst, g)
    res = {"second-order": cond}
    if not cond.passed:
        return _implication("C6.2", False, False, res, "second-order => slwp")
    phi = antiderivative_function(inst.psi)
    slwp = _search("slwp", inst, f, phi=phi)
    res["slwp"] = slwp
    res["phi"] = phi.name
    return _implication("C6.2", True, slwp.found, res, "second-order => slwp")


_RUNNERS = {"T3.3": _t33, "T3.4": _t34, "P3.6": _p36, "T4.5": _t45, "T5.2": _t52,
            "C5.3": _c53, "P6.1": _p61, "C6.2": _c62}


def verify_theorem(theorem: str, inst: TheoremInstance) -> TheoremReport:
    """Run the checkers behind ``theorem`` on ``inst`` and classify the outcome."""
    if theorem not in _RUNNERS:
        raise ValueError(f"unknown theorem id {theorem!r}")
    return _RUNNERS[theorem](inst)
