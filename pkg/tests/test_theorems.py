import pytest

from tiltlab.admissible import parse_admissible
from tiltlab.search import SweepSpec
from tiltlab.theorems import (CONSISTENT, THEOREMS, VACUOUS, TheoremInstance, verify_theorem)

T1 = parse_admissible("power:1")
T2 = parse_admissible("power:2")
SMALL = SweepSpec(exponents=tuple(range(-6, 7)), r_fractions=(0.5, 0.25))


def inst(fid, x_bar=0.0, box=(-1.0, 1.0), **kw):
    return TheoremInstance(fid, box, x_bar, points=1001, sweep=SMALL, **kw)


def test_t45_square_both_found():
    rep = verify_theorem("T4.5", inst("quad", phi=T2))
    assert rep.status == CONSISTENT and rep.detail.startswith("both found")
    assert rep.results["tslm"].found


def test_t45_quartic_with_square_both_fail():
    rep = verify_theorem("T4.5", inst("quartic", phi=T2))
    assert rep.status == CONSISTENT and rep.detail.startswith("both-fail")


def test_t33_square():
    rep = verify_theorem("T3.3", inst("quad", phi=T2))
    assert rep.status == CONSISTENT
    assert rep.results["strong-metric-reg"].found and rep.results["slwp"].found


def test_p36_square_with_given_radius():
    rep = verify_theorem("P3.6", inst("quad", phi=T2, eps=0.5))
    assert rep.status == CONSISTENT
    assert rep.results["interiority[0]"].margin >= 0.9


def test_t52_flat_well_at_center_both_fail():
    rep = verify_theorem("T5.2", inst("flat-well", box=(-2.0, 2.0), phi=T2))
    assert rep.status == CONSISTENT and "both-fail" in rep.detail


def test_c53_square_all_found():
    rep = verify_theorem("C5.3", inst("quad", phi=T2))
    assert rep.status == CONSISTENT and rep.detail.startswith("all found")


@pytest.mark.parametrize("tid", ["P6.1", "C6.2"])
def test_second_order_theorems_on_square(tid):
    rep = verify_theorem(tid, inst("quad", psi=T1))
    assert rep.status == CONSISTENT


def test_t34_non_minimizer_is_vacuous():
    rep = verify_theorem("T3.4", inst("quad", x_bar=0.5, phi=T2))
    assert rep.status == VACUOUS


def test_non_strict_phi_is_rejected():
    with pytest.raises(ValueError):
        verify_theorem("T4.5", inst("quad", phi=T1))


def test_unknown_theorem_id():
    with pytest.raises(ValueError):
        verify_theorem("T9.9", inst("quad", phi=T2))


def test_report_serializes_every_result():
    rep = verify_theorem("T4.5", inst("quad", phi=T2))
    d = rep.to_dict()
    assert d["theorem"] == "T4.5" and set(d["results"]) == {"slwp", "tslm"}
    assert set(THEOREMS) == {"T3.3", "T3.4", "P3.6", "T4.5", "T5.2", "C5.3", "P6.1", "C6.2"}
