#!/usr/bin/env python3
"""Command-line MILP/LP solver over MPS files (SciPy/HiGHS backend).

Usage: solve_mps.py INPUT.mps OUTPUT.txt [--time-limit SECONDS] [--gap REL]

Reads a fixed-form MPS file (ROWS/COLUMNS with INTORG markers/RHS/BOUNDS/SOS)
and writes a plain-text solution file:

    status optimal          # or: infeasible, unbounded, limit
    objective 12.5          # only when a solution exists
    X1 0                    # one line per column, name + value
    X2 3.25

SOS2 sets (section "SOS", type S2) are reformulated with auxiliary segment
binaries since SciPy's milp has no native SOS support. Auxiliary columns are
not reported in the output.
"""

import argparse
import sys

import numpy as np
from scipy.optimize import milp, LinearConstraint, Bounds

INF = float("inf")
BIG = 1e9


def parse_rational(tok):
    if "/" in tok:
        num, den = tok.split("/", 1)
        return float(num) / float(den)
    return float(tok)


class MpsModel:
    def __init__(self):
        self.col_names = []
        self.col_index = {}
        self.integrality = []
        self.lo = []
        self.up = []
        self.lo_set = []
        self.up_set = []
        self.obj = {}
        self.obj_const = 0.0
        self.row_names = []
        self.row_sense = {}
        self.row_terms = {}
        self.row_rhs = {}
        self.obj_row = None
        self.sos2 = []  # list of (member column indices, weights)

    def ensure_col(self, name, integer):
        if name in self.col_index:
            return self.col_index[name]
        j = len(self.col_names)
        self.col_index[name] = j
        self.col_names.append(name)
        self.integrality.append(1 if integer else 0)
        self.lo.append(0.0)
        self.up.append(INF)
        self.lo_set.append(False)
        self.up_set.append(False)
        return j


def read_mps(path):
    m = MpsModel()
    section = None
    int_mode = False
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("*"):
                continue
            toks = line.split()
            if not line.startswith(" "):
                head = toks[0]
                if head == "NAME":
                    continue
                if head in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "SOS", "RANGES"):
                    section = head
                    continue
                if head == "ENDATA":
                    break
                raise ValueError(f"unknown section {head}")
            if section == "ROWS":
                t, name = toks[0], toks[1]
                if t == "N":
                    if m.obj_row is None:
                        m.obj_row = name
                else:
                    m.row_names.append(name)
                    m.row_sense[name] = t
                    m.row_terms[name] = []
            elif section == "COLUMNS":
                if len(toks) >= 3 and toks[1] == "'MARKER'":
                    int_mode = "'INTORG'" in line
                    continue
                col = toks[0]
                j = m.ensure_col(col, int_mode)
                for k in range(1, len(toks) - 1, 2):
                    row, val = toks[k], parse_rational(toks[k + 1])
                    if row == m.obj_row:
                        m.obj[j] = m.obj.get(j, 0.0) + val
                    else:
                        m.row_terms[row].append((j, val))
            elif section == "RHS":
                for k in range(1, len(toks) - 1, 2):
                    row, val = toks[k], parse_rational(toks[k + 1])
                    if row == m.obj_row:
                        m.obj_const = -val
                    else:
                        m.row_rhs[row] = val
            elif section == "BOUNDS":
                btype, col = toks[0], toks[2]
                j = m.col_index[col]
                if btype == "LO":
                    m.lo[j] = parse_rational(toks[3])
                    m.lo_set[j] = True
                elif btype == "UP":
                    m.up[j] = parse_rational(toks[3])
                    m.up_set[j] = True
                elif btype == "FX":
                    v = parse_rational(toks[3])
                    m.lo[j] = m.up[j] = v
                    m.lo_set[j] = m.up_set[j] = True
                elif btype == "MI":
                    m.lo[j] = -INF
                    m.lo_set[j] = True
                elif btype == "PL":
                    m.up[j] = INF
                    m.up_set[j] = True
                elif btype == "FR":
                    m.lo[j], m.up[j] = -INF, INF
                    m.lo_set[j] = m.up_set[j] = True
                elif btype == "BV":
                    m.integrality[j] = 1
                    m.lo[j], m.up[j] = 0.0, 1.0
                    m.lo_set[j] = m.up_set[j] = True
                else:
                    raise ValueError(f"bound type {btype} not supported")
            elif section == "SOS":
                if toks[0] in ("S1", "S2"):
                    if toks[0] == "S1":
                        raise ValueError("only S2 sets supported")
                    m.sos2.append(([], []))
                else:
                    members, weights = m.sos2[-1]
                    members.append(m.col_index[toks[0]])
                    weights.append(parse_rational(toks[1]))
            elif section == "RANGES":
                raise ValueError("RANGES not supported")
    # binaries default to [0,1] when no explicit bound was given
    for j in range(len(m.col_names)):
        if m.integrality[j] and not m.up_set[j]:
            m.up[j] = 1.0
        if m.integrality[j] and not m.lo_set[j]:
            m.lo[j] = 0.0
    return m


def reformulate_sos2(m):
    """Replace each SOS2 set with segment binaries: one binary per adjacent
    member pair, sum = 1, and member_k <= U_k * (seg_{k-1} + seg_k)."""
    extra_rows = []
    n_orig = len(m.col_names)
    for members, _ in m.sos2:
        if any(m.lo[j] < 0 for j in members):
            raise ValueError("SOS2 reformulation requires nonnegative members")
        k = len(members)
        segs = [m.ensure_col(f"__sos2seg_{len(m.col_names)}", True) for _ in range(k - 1)]
        extra_rows.append(([(s, 1.0) for s in segs], "E", 1.0))
        for i, j in enumerate(members):
            u = m.up[j] if np.isfinite(m.up[j]) else BIG
            terms = [(j, 1.0)]
            if i > 0:
                terms.append((segs[i - 1], -u))
            if i < k - 1:
                terms.append((segs[i], -u))
            extra_rows.append((terms, "L", 0.0))
    for idx, (terms, sense, rhs) in enumerate(extra_rows):
        name = f"__sos2row_{idx}"
        m.row_names.append(name)
        m.row_sense[name] = sense
        m.row_terms[name] = terms
        m.row_rhs[name] = rhs
    return n_orig


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("input")
    ap.add_argument("output")
    ap.add_argument("--time-limit", type=float, default=None)
    ap.add_argument("--gap", type=float, default=None)
    args = ap.parse_args()

    m = read_mps(args.input)
    n_report = reformulate_sos2(m)
    n = len(m.col_names)

    c = np.zeros(n)
    for j, v in m.obj.items():
        c[j] = v
    rows = []
    lbs = []
    ubs = []
    for name in m.row_names:
        rows.append(m.row_terms[name])
        rhs = m.row_rhs.get(name, 0.0)
        s = m.row_sense[name]
        lbs.append(rhs if s in ("G", "E") else -INF)
        ubs.append(rhs if s in ("L", "E") else INF)
    a = np.zeros((len(rows), n))
    for i, terms in enumerate(rows):
        for j, v in terms:
            a[i, j] += v
    constraints = LinearConstraint(a, lbs, ubs) if rows else ()

    options = {}
    if args.time_limit is not None:
        options["time_limit"] = args.time_limit
    if args.gap is not None:
        options["mip_rel_gap"] = args.gap
    res = milp(
        c,
        constraints=constraints,
        integrality=np.array(m.integrality),
        bounds=Bounds(np.array(m.lo), np.array(m.up)),
        options=options,
    )

    status_map = {0: "optimal", 1: "limit", 2: "infeasible", 3: "unbounded"}
    status = status_map.get(res.status, "infeasible")
    with open(args.output, "w") as out:
        out.write(f"status {status}\n")
        if res.x is not None:
            out.write(f"objective {float(res.fun) + m.obj_const!r}\n")
            for j in range(n_report):
                out.write(f"{m.col_names[j]} {float(res.x[j])!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
