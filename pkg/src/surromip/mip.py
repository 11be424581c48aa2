"""MIP data model: variables, linear/indicator/SOS1 constraints, objective.

A model is mutated by a single owner while it is being built and treated as
immutable afterwards.  ``check_assignment`` is the feasibility arbiter used
by the solver and the verification harness; its tolerance semantics follow
the usual solver conventions (feastol on constraint rows, inttol on
integrality and indicator guards).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "CONTINUOUS",
    "BINARY",
    "INTEGER",
    "Var",
    "LinCons",
    "IndicatorCons",
    "Sos1Cons",
    "MipModel",
    "Violation",
    "ViolationReport",
    "ModelError",
]

CONTINUOUS = "continuous"
BINARY = "binary"
INTEGER = "integer"

INF = math.inf


class ModelError(ValueError):
    """Invalid model construction (crossed bounds, bad ids, duplicate names)."""


@dataclass
class Var:
    id: int
    kind: str
    lb: float
    ub: float
    name: str

    def __eq__(self, other):
        return (
            isinstance(other, Var)
            and (self.id, self.kind, self.lb, self.ub, self.name)
            == (other.id, other.kind, other.lb, other.ub, other.name)
        )


def merge_terms(terms):
    """Merge duplicate variable ids and drop zero coefficients.

    First-appearance order of the surviving ids is kept so that writers are
    deterministic.
    """
    acc = {}
    for coef, vid in terms:
        acc[vid] = acc.get(vid, 0.0) + float(coef)
    return tuple((c, v) for v, c in acc.items() if c != 0.0)


@dataclass
class LinCons:
    terms: tuple  # ((coef, var_id), ...)
    sense: str  # "<=" | "=" | ">="
    rhs: float
    name: str = ""

    def __post_init__(self):
        if self.sense not in ("<=", "=", ">="):
            raise ModelError(f"unknown sense {self.sense!r}")
        terms = merge_terms(self.terms)
        for coef, _ in terms:
            if not math.isfinite(coef):
                raise ModelError(f"non-finite coefficient in {self.name!r}")
        if not math.isfinite(self.rhs):
            raise ModelError(f"non-finite rhs in {self.name!r}")
        self.terms = terms

    def __eq__(self, other):
        return (
            isinstance(other, LinCons)
            and (self.terms, self.sense, self.rhs, self.name)
            == (other.terms, other.sense, other.rhs, other.name)
        )


@dataclass
class IndicatorCons:
    guard: int
    active_value: int  # 0 or 1
    implied: LinCons
    name: str = ""

    def __post_init__(self):
        if self.active_value not in (0, 1):
            raise ModelError("indicator active_value must be 0 or 1")
        if self.implied.sense == "=":
            raise ModelError("indicator implied constraint must be <= or >=")

    def __eq__(self, other):
        return (
            isinstance(other, IndicatorCons)
            and (self.guard, self.active_value, self.implied, self.name)
            == (other.guard, other.active_value, other.implied, other.name)
        )


@dataclass
class Sos1Cons:
    members: tuple
    weights: tuple
    name: str = ""

    def __post_init__(self):
        members = tuple(self.members)
        weights = tuple(float(w) for w in self.weights)
        if len(members) < 2:
            raise ModelError("SOS1 needs at least 2 members")
        if len(members) != len(weights):
            raise ModelError("SOS1 members/weights length mismatch")
        if any(b <= a for a, b in zip(weights, weights[1:])):
            raise ModelError("SOS1 weights must be strictly increasing")
        self.members = members
        self.weights = weights

    def __eq__(self, other):
        return (
            isinstance(other, Sos1Cons)
            and (self.members, self.weights, self.name)
            == (other.members, other.weights, other.name)
        )


@dataclass
class Violation:
    name: str
    magnitude: float
    kind: str  # bound | linear | indicator | sos1 | integrality


@dataclass
class ViolationReport:
    violations: list
    max_violation: float = 0.0

    @property
    def feasible(self):
        return not self.violations


@dataclass
class MipModel:
    vars: list = field(default_factory=list)
    lin_cons: list = field(default_factory=list)
    ind_cons: list = field(default_factory=list)
    sos1_cons: list = field(default_factory=list)
    # (sense, terms, constant); sense in {"min", "max"}
    objective: tuple = ("min", (), 0.0)
    _names: dict = field(default_factory=dict)
    _cons_by_id: list = field(default_factory=list)

    # -- variables ----------------------------------------------------------

    def add_var(self, kind=CONTINUOUS, lb=-INF, ub=INF, name=None):
        """Add a variable and return its dense id."""
        if kind not in (CONTINUOUS, BINARY, INTEGER):
            raise ModelError(f"unknown variable kind {kind!r}")
        lb, ub = float(lb), float(ub)
        if kind == BINARY:
            if not (lb in (0.0, 1.0) and ub in (0.0, 1.0)):
                raise ModelError(f"binary bounds must be within {{0,1}}: {name!r}")
        if lb > ub:
            raise ModelError(f"crossed bounds [{lb}, {ub}] for {name!r}")
        vid = len(self.vars)
        if name is None:
            name = f"x{vid}"
        if name in self._names:
            raise ModelError(f"duplicate variable name {name!r}")
        self._names[name] = vid
        self.vars.append(Var(vid, kind, lb, ub, name))
        return vid

    def var_by_name(self, name):
        return self.vars[self._names[name]]

    def _check_vids(self, terms):
        for _, vid in terms:
            if not 0 <= vid < len(self.vars):
                raise ModelError(f"unknown variable id {vid}")

    # -- constraints --------------------------------------------------------

    def add_constraint(self, cons):
        """Store a LinCons / IndicatorCons / Sos1Cons; returns its id."""
        if isinstance(cons, LinCons):
            self._check_vids(cons.terms)
            self.lin_cons.append(cons)
        elif isinstance(cons, IndicatorCons):
            self._check_vids(cons.implied.terms)
            if not 0 <= cons.guard < len(self.vars):
                raise ModelError(f"unknown guard id {cons.guard}")
            if self.vars[cons.guard].kind != BINARY:
                raise ModelError(f"indicator guard {cons.guard} is not binary")
            self.ind_cons.append(cons)
        elif isinstance(cons, Sos1Cons):
            self._check_vids((1.0, v) for v in cons.members)
            self.sos1_cons.append(cons)
        else:
            raise ModelError(f"unknown constraint type {type(cons).__name__}")
        cid = len(self._cons_by_id)
        self._cons_by_id.append(cons)
        return cid

    def constraint(self, cid):
        return self._cons_by_id[cid]

    def add_lin(self, terms, sense, rhs, name=""):
        return self.add_constraint(LinCons(tuple(terms), sense, float(rhs), name))

    def set_objective(self, sense, terms, constant=0.0):
        if sense not in ("min", "max"):
            raise ModelError(f"unknown objective sense {sense!r}")
        terms = merge_terms(terms)
        self._check_vids(terms)
        self.objective = (sense, terms, float(constant))

    # -- inspection ---------------------------------------------------------

    def stats(self):
        """Variable and constraint counts by kind."""
        vk = {CONTINUOUS: 0, BINARY: 0, INTEGER: 0}
        for v in self.vars:
            vk[v.kind] += 1
        return {
            "vars": vk,
            "cons": {
                "linear": len(self.lin_cons),
                "indicator": len(self.ind_cons),
                "sos1": len(self.sos1_cons),
            },
        }

    def check_assignment(self, assignment, feastol=1e-6, inttol=1e-6):
        """Feasibility report of a full assignment at the given tolerances."""
        for v in self.vars:
            if v.id not in assignment:
                raise ModelError(f"assignment missing variable {v.name!r}")
        out = []

        def value(vid):
            return float(assignment[vid])

        for v in self.vars:
            over = max(v.lb - value(v.id), value(v.id) - v.ub)
            if over > feastol:
                out.append(Violation(v.name, over, "bound"))
            if v.kind in (BINARY, INTEGER):
                dist = abs(value(v.id) - round(value(v.id)))
                if dist > inttol:
                    out.append(Violation(v.name, dist, "integrality"))

        def lin_violation(cons):
            lhs = sum(c * value(vid) for c, vid in cons.terms)
            if cons.sense == "<=":
                return max(0.0, lhs - cons.rhs)
            if cons.sense == ">=":
                return max(0.0, cons.rhs - lhs)
            return abs(lhs - cons.rhs)

        for cons in self.lin_cons:
            mag = lin_violation(cons)
            if mag > feastol:
                out.append(Violation(cons.name, mag, "linear"))

        for cons in self.ind_cons:
            # guard activity uses inttol: a guard within inttol of the
            # active value switches the implied constraint on
            if abs(value(cons.guard) - cons.active_value) <= inttol:
                mag = lin_violation(cons.implied)
                if mag > feastol:
                    out.append(Violation(cons.name, mag, "indicator"))

        for cons in self.sos1_cons:
            mags = sorted((abs(value(v)) for v in cons.members), reverse=True)
            if len([m for m in mags if m > feastol]) >= 2:
                out.append(Violation(cons.name, mags[1], "sos1"))

        return ViolationReport(out, max((v.magnitude for v in out), default=0.0))

    def __eq__(self, other):
        return (
            isinstance(other, MipModel)
            and self.vars == other.vars
            and self.lin_cons == other.lin_cons
            and self.ind_cons == other.ind_cons
            and self.sos1_cons == other.sos1_cons
            and self.objective == other.objective
        )
