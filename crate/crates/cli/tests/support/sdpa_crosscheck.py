"""Solve a sparse SDPA file with an independent solver and print JSON.

The file is read as the SDPA dual side, max <F0, Y> s.t. <Fi, Y> = ci, Y psd.
The printed objective is -<F0, Y>, i.e. the objective of the exporting program.
"""
import json
import sys

import cvxpy as cp
import numpy as np


def tokens(line):
    for ch in "{}(),":
        line = line.replace(ch, " ")
    return line.split()


def read(path):
    with open(path) as f:
        lines = [l.strip() for l in f]
    lines = [l for l in lines if l and not l.startswith(("*", '"'))]
    m = int(tokens(lines[0])[0])
    nb = int(tokens(lines[1])[0])
    sizes = [int(t) for t in tokens(lines[2])[:nb]]
    pos = 3
    rhs = []
    while len(rhs) < m:
        rhs += [float(t) for t in tokens(lines[pos])]
        pos += 1
    mats = [[np.zeros((abs(s), abs(s))) for s in sizes] for _ in range(m + 1)]
    for line in lines[pos:]:
        k, b, i, j, v = line.split()
        k, b, i, j, v = int(k), int(b) - 1, int(i) - 1, int(j) - 1, float(v)
        mats[k][b][i, j] += v
        if i != j:
            mats[k][b][j, i] += v
    return sizes, np.array(rhs), mats


def main():
    sizes, rhs, mats = read(sys.argv[1])
    ys = []
    cons = []
    for s in sizes:
        if s > 0:
            y = cp.Variable((s, s), symmetric=True)
            cons.append(y >> 0)
        else:
            y = cp.Variable(-s)
            cons.append(y >= 0)
        ys.append(y)

    def inner(blocks):
        terms = []
        for s, f, y in zip(sizes, blocks, ys):
            if not f.any():
                continue
            terms.append(cp.trace(f @ y) if s > 0 else np.diag(f) @ y)
        return cp.sum(cp.hstack(terms)) if terms else 0.0

    for k, c in enumerate(rhs):
        cons.append(inner(mats[k + 1]) == c)
    prob = cp.Problem(cp.Maximize(inner(mats[0])), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11)
    out = {"status": prob.status, "objective": None}
    if prob.value is not None and np.isfinite(prob.value):
        out["objective"] = -float(prob.value)
        if "--dump" in sys.argv:
            out["blocks"] = [np.atleast_1d(y.value).tolist() for y in ys]
    print(json.dumps(out))


if __name__ == "__main__":
    main()
