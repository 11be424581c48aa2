"""Deterministic LP / MPS writers and an LP self-parser.

The LP dialect is CPLEX-flavoured with an indicator arrow extension; MPS is
free-format with the commercial INDICATORS section.  Numbers are rendered
with shortest round-trip precision, so ``parse_lp(write_lp(m))`` recovers a
structurally equal model bit for bit.
"""

from __future__ import annotations

import math
import re

from .mip import (
    BINARY,
    CONTINUOUS,
    INTEGER,
    IndicatorCons,
    LinCons,
    MipModel,
    Sos1Cons,
)

__all__ = ["write_lp", "write_mps", "parse_lp", "LpParseError"]

_NAME_RE = re.compile(r"[^A-Za-z0-9_]")


class LpParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _num(x):
    """Shortest decimal that round-trips to the same float."""
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(float(x))


def _name(s):
    return _NAME_RE.sub("_", s)


def _expr(terms, names, constant=None):
    parts = [f"{_num(c)} {names[v]}" for c, v in terms]
    if constant is not None and constant != 0.0:
        parts.append(_num(constant))
    if not parts:
        parts.append("0")
    return " + ".join(parts)


def write_lp(model: MipModel) -> str:
    """Render a model in the LP dialect; byte-deterministic."""
    names = [_name(v.name) for v in model.vars]
    sense, terms, const = model.objective
    out = []
    out.append("Maximize" if sense == "max" else "Minimize")
    out.append(f" obj: {_expr(terms, names, const)}")
    out.append("Subject To")
    for cons in model.lin_cons:
        out.append(f" {_name(cons.name)}: {_expr(cons.terms, names)} "
                   f"{cons.sense} {_num(cons.rhs)}")
    for cons in model.ind_cons:
        imp = cons.implied
        out.append(
            f" {_name(cons.name)}: {names[cons.guard]} = {cons.active_value} -> "
            f"{_expr(imp.terms, names)} {imp.sense} {_num(imp.rhs)} ! {_name(imp.name)}"
        )
    out.append("Bounds")
    for v in model.vars:
        out.append(f" {_num(v.lb)} <= {names[v.id]} <= {_num(v.ub)}")
    generals = [names[v.id] for v in model.vars if v.kind == INTEGER]
    if generals:
        out.append("General")
        out.extend(f" {n}" for n in generals)
    binaries = [names[v.id] for v in model.vars if v.kind == BINARY]
    if binaries:
        out.append("Binary")
        out.extend(f" {n}" for n in binaries)
    if model.sos1_cons:
        out.append("SOS")
        for cons in model.sos1_cons:
            pairs = " ".join(
                f"{names[v]}:{_num(w)}" for v, w in zip(cons.members, cons.weights)
            )
            out.append(f" {_name(cons.name)}: S1 :: {pairs}")
    out.append("End")
    return "\n".join(out) + "\n"


def _parse_float(tok, lineno):
    try:
        return float(tok)
    except ValueError:
        raise LpParseError(f"expected a number, got {tok!r}", lineno)


def _parse_expr(tokens, lineno):
    """Token list -> (terms as (coef, name) pairs, constant)."""
    terms = []
    constant = 0.0
    chunks = []
    cur = []
    for tok in tokens:
        if tok == "+":
            chunks.append(cur)
            cur = []
        else:
            cur.append(tok)
    chunks.append(cur)
    for chunk in chunks:
        if not chunk:
            raise LpParseError("empty term", lineno)
        if len(chunk) == 1:
            constant += _parse_float(chunk[0], lineno)
        elif len(chunk) == 2:
            terms.append((_parse_float(chunk[0], lineno), chunk[1]))
        else:
            raise LpParseError(f"malformed term {' '.join(chunk)!r}", lineno)
    return terms, constant


def parse_lp(text: str) -> MipModel:
    """Parse text produced by :func:`write_lp` back into a MipModel."""
    lines = text.splitlines()
    section = None
    obj_sense = None
    obj_line = None
    cons_lines = []
    bound_lines = []
    generals = set()
    binaries = set()
    sos_lines = []
    saw_end = False
    for i, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        low = line.lower()
        if low in ("minimize", "maximize"):
            obj_sense = "min" if low == "minimize" else "max"
            section = "objective"
            continue
        if low == "subject to":
            section = "cons"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low == "general":
            section = "general"
            continue
        if low == "binary":
            section = "binary"
            continue
        if low == "sos":
            section = "sos"
            continue
        if low == "end":
            saw_end = True
            section = None
            continue
        if section == "objective":
            obj_line = (i, line)
        elif section == "cons":
            cons_lines.append((i, line))
        elif section == "bounds":
            bound_lines.append((i, line))
        elif section == "general":
            generals.add(line)
        elif section == "binary":
            binaries.add(line)
        elif section == "sos":
            sos_lines.append((i, line))
        else:
            raise LpParseError(f"content outside any section: {line!r}", i)
    if obj_sense is None or obj_line is None:
        raise LpParseError("missing objective section")
    if not saw_end:
        raise LpParseError("missing End marker", len(lines))

    model = MipModel()
    ids = {}
    for lineno, line in bound_lines:
        toks = line.split()
        if len(toks) != 5 or toks[1] != "<=" or toks[3] != "<=":
            raise LpParseError(f"malformed bound line {line!r}", lineno)
        lb, name, ub = _parse_float(toks[0], lineno), toks[2], _parse_float(toks[4], lineno)
        kind = BINARY if name in binaries else INTEGER if name in generals else CONTINUOUS
        ids[name] = model.add_var(kind, lb, ub, name)

    def resolve(terms, lineno):
        out = []
        for coef, name in terms:
            if name not in ids:
                raise LpParseError(f"unknown variable {name!r}", lineno)
            out.append((coef, ids[name]))
        return tuple(out)

    lineno, line = obj_line
    label, _, rest = line.partition(":")
    if not rest:
        raise LpParseError("objective needs a label", lineno)
    terms, constant = _parse_expr(rest.split(), lineno)
    model.set_objective(obj_sense, resolve(terms, lineno), constant)

    for lineno, line in cons_lines:
        label, colon, rest = line.partition(":")
        if not colon:
            raise LpParseError(f"constraint needs a label: {line!r}", lineno)
        label = label.strip()
        toks = rest.split()
        if "->" in toks:
            arrow = toks.index("->")
            head, tail = toks[:arrow], toks[arrow + 1:]
            if len(head) != 3 or head[1] != "=":
                raise LpParseError(f"malformed indicator guard in {line!r}", lineno)
            guard, active = head[0], int(head[2])
            if "!" not in tail:
                raise LpParseError("indicator missing implied-name marker", lineno)
            bang = tail.index("!")
            imp_name = tail[bang + 1]
            tail = tail[:bang]
            if len(tail) < 3 or tail[-2] not in ("<=", ">=", "="):
                raise LpParseError(f"malformed indicator body in {line!r}", lineno)
            sense, rhs = tail[-2], _parse_float(tail[-1], lineno)
            terms, constant = _parse_expr(tail[:-2], lineno)
            implied = LinCons(resolve(terms, lineno), sense, rhs - constant, imp_name)
            if guard not in ids:
                raise LpParseError(f"unknown guard {guard!r}", lineno)
            model.add_constraint(IndicatorCons(ids[guard], active, implied, label))
        else:
            if len(toks) < 3 or toks[-2] not in ("<=", ">=", "="):
                raise LpParseError(f"malformed constraint {line!r}", lineno)
            sense, rhs = toks[-2], _parse_float(toks[-1], lineno)
            terms, constant = _parse_expr(toks[:-2], lineno)
            model.add_constraint(
                LinCons(resolve(terms, lineno), sense, rhs - constant, label)
            )

    for lineno, line in sos_lines:
        label, colon, rest = line.partition(":")
        if not colon:
            raise LpParseError(f"SOS needs a label: {line!r}", lineno)
        toks = rest.split()
        if toks[:2] != ["S1", "::"]:
            raise LpParseError(f"malformed SOS line {line!r}", lineno)
        members, weights = [], []
        for pair in toks[2:]:
            name, _, w = pair.partition(":")
            if name not in ids:
                raise LpParseError(f"unknown SOS member {name!r}", lineno)
            members.append(ids[name])
            weights.append(_parse_float(w, lineno))
        model.add_constraint(Sos1Cons(tuple(members), tuple(weights), label.strip()))

    return model


def write_mps(model: MipModel) -> str:
    """Free-format MPS with SOS and INDICATORS extension sections."""
    names = [_name(v.name) for v in model.vars]
    sense, terms, const = model.objective
    out = ["NAME surromip", f"OBJSENSE", f" {'MAX' if sense == 'max' else 'MIN'}"]
    sense_code = {"<=": "L", ">=": "G", "=": "E"}

    rows = [("N", "obj", None)]
    for cons in model.lin_cons:
        rows.append((sense_code[cons.sense], _name(cons.name), cons))
    for cons in model.ind_cons:
        rows.append((sense_code[cons.implied.sense], _name(cons.implied.name), cons.implied))
    out.append("ROWS")
    out.extend(f" {code} {rname}" for code, rname, _ in rows)

    by_col = {v.id: [] for v in model.vars}
    for coef, vid in terms:
        by_col[vid].append(("obj", coef))
    for _, rname, cons in rows[1:]:
        for coef, vid in cons.terms:
            by_col[vid].append((rname, coef))
    out.append("COLUMNS")
    marker = 0
    for v in model.vars:
        integral = v.kind in (BINARY, INTEGER)
        if integral:
            out.append(f" MARKER{marker} 'MARKER' 'INTORG'")
            marker += 1
        for rname, coef in by_col[v.id]:
            out.append(f" {names[v.id]} {rname} {_num(coef)}")
        if integral:
            out.append(f" MARKER{marker} 'MARKER' 'INTEND'")
            marker += 1

    out.append("RHS")
    if const != 0.0:
        out.append(f" RHS obj {_num(-const)}")
    for _, rname, cons in rows[1:]:
        if cons.rhs != 0.0:
            out.append(f" RHS {rname} {_num(cons.rhs)}")

    out.append("BOUNDS")
    for v in model.vars:
        n = names[v.id]
        if v.kind == BINARY and v.lb == 0.0 and v.ub == 1.0:
            out.append(f" BV BND {n}")
            continue
        if v.lb == -math.inf and v.ub == math.inf:
            out.append(f" FR BND {n}")
            continue
        if v.lb == -math.inf:
            out.append(f" MI BND {n}")
        else:
            out.append(f" LO BND {n} {_num(v.lb)}")
        if v.ub == math.inf:
            out.append(f" PL BND {n}")
        else:
            out.append(f" UP BND {n} {_num(v.ub)}")

    if model.sos1_cons:
        out.append("SOS")
        for cons in model.sos1_cons:
            out.append(f" S1 SOS {_name(cons.name)}")
            for vid, w in zip(cons.members, cons.weights):
                out.append(f"    {names[vid]} {_num(w)}")

    if model.ind_cons:
        out.append("INDICATORS")
        for cons in model.ind_cons:
            out.append(
                f" IND {_name(cons.implied.name)} {names[cons.guard]} {cons.active_value}"
            )

    out.append("ENDATA")
    return "\n".join(out) + "\n"
