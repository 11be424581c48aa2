import math

import pytest

from surromip.mip import (
    BINARY,
    CONTINUOUS,
    INTEGER,
    IndicatorCons,
    LinCons,
    MipModel,
    ModelError,
    Sos1Cons,
    merge_terms,
)


def test_merge_terms_dedup_and_order():
    assert merge_terms([(1.0, 0), (2.0, 1), (3.0, 0)]) == ((4.0, 0), (2.0, 1))
    assert merge_terms([(1.0, 0), (-1.0, 0)]) == ()
    assert merge_terms([(0.0, 5), (2.0, 3)]) == ((2.0, 3),)


def test_add_var_contract():
    m = MipModel()
    x = m.add_var(CONTINUOUS, 0.0, 1.0, "x")
    assert x == 0 and m.vars[x].name == "x"
    with pytest.raises(ModelError):
        m.add_var(CONTINUOUS, 0.0, 1.0, "x")  # duplicate name
    with pytest.raises(ModelError):
        m.add_var(CONTINUOUS, 2.0, 1.0, "y")  # crossed bounds
    with pytest.raises(ModelError):
        m.add_var(BINARY, 0.0, 2.0, "z")
    with pytest.raises(ModelError):
        m.add_var("weird", 0.0, 1.0, "w")


def test_constraint_validation():
    m = MipModel()
    x = m.add_var(CONTINUOUS, 0.0, 1.0, "x")
    z = m.add_var(BINARY, 0.0, 1.0, "z")
    with pytest.raises(ModelError):
        m.add_lin(((1.0, 99),), "<=", 1.0, "bad_vid")
    with pytest.raises(ModelError):
        LinCons(((1.0, x),), "<", 1.0)
    with pytest.raises(ModelError):
        LinCons(((math.inf, x),), "<=", 1.0)
    with pytest.raises(ModelError):
        # indicator guard must be binary
        m.add_constraint(IndicatorCons(x, 1, LinCons(((1.0, x),), "<=", 1.0)))
    with pytest.raises(ModelError):
        # implied equality is not allowed
        IndicatorCons(z, 1, LinCons(((1.0, x),), "=", 1.0))
    with pytest.raises(ModelError):
        Sos1Cons((x,), (1.0,))
    with pytest.raises(ModelError):
        Sos1Cons((x, z), (2.0, 1.0))  # weights must increase
    m.add_constraint(IndicatorCons(z, 0, LinCons(((1.0, x),), "<=", 0.5, "c")))
    assert len(m.ind_cons) == 1


def test_stats():
    m = MipModel()
    m.add_var(CONTINUOUS, 0, 1, "a")
    m.add_var(BINARY, 0, 1, "b")
    m.add_var(INTEGER, 0, 5, "c")
    m.add_lin(((1.0, 0),), "<=", 1.0, "r")
    s = m.stats()
    assert s["vars"] == {CONTINUOUS: 1, BINARY: 1, INTEGER: 1}
    assert s["cons"] == {"linear": 1, "indicator": 0, "sos1": 0}


def make_checked_model():
    m = MipModel()
    x = m.add_var(CONTINUOUS, 0.0, 10.0, "x")
    z = m.add_var(BINARY, 0.0, 1.0, "z")
    s = m.add_var(CONTINUOUS, 0.0, 10.0, "s")
    m.add_lin(((1.0, x), (1.0, s)), "<=", 5.0, "cap")
    m.add_constraint(IndicatorCons(z, 1, LinCons(((1.0, x),), "<=", 1.0, "imp"),
                                   "ind"))
    m.add_constraint(Sos1Cons((x, s), (1.0, 2.0), "sos"))
    return m, x, z, s


def test_check_assignment_feasible():
    m, x, z, s = make_checked_model()
    rep = m.check_assignment({x: 1.0, z: 1.0, s: 0.0})
    assert rep.feasible and rep.max_violation == 0.0


def test_check_assignment_violations():
    m, x, z, s = make_checked_model()
    rep = m.check_assignment({x: 4.0, z: 1.0, s: 2.0})
    kinds = {v.kind for v in rep.violations}
    # cap row ok (6 > 5 actually violated), indicator active and violated,
    # and both SOS members are far from zero
    assert "linear" in kinds and "indicator" in kinds and "sos1" in kinds
    sos = [v for v in rep.violations if v.kind == "sos1"][0]
    assert sos.magnitude == pytest.approx(2.0)  # second largest member


def test_check_assignment_tolerances():
    m, x, z, s = make_checked_model()
    # inside feastol everywhere
    rep = m.check_assignment({x: 1.0 + 5e-7, z: 1.0, s: 5e-7})
    assert rep.feasible
    # integrality measured against inttol
    rep = m.check_assignment({x: 0.0, z: 0.4, s: 0.0}, inttol=1e-6)
    assert any(v.kind == "integrality" for v in rep.violations)
    # an inactive guard disables the implied constraint
    rep = m.check_assignment({x: 4.0, z: 0.0, s: 0.0})
    assert not any(v.kind == "indicator" for v in rep.violations)


def test_check_assignment_requires_all_vars():
    m, x, z, s = make_checked_model()
    with pytest.raises(ModelError):
        m.check_assignment({x: 0.0})


def test_structural_equality():
    def build():
        m = MipModel()
        a = m.add_var(CONTINUOUS, 0, 1, "a")
        m.add_lin(((1.0, a),), "<=", 1.0, "r")
        m.set_objective("max", ((1.0, a),), 2.0)
        return m
    assert build() == build()
    other = build()
    other.set_objective("min", ((1.0, 0),), 2.0)
    assert build() != other
