"""Brute-force LP oracle by vertex and extreme-ray enumeration.

Only valid for LPs whose variables are all bounded below (pointed feasible
sets), which is how the random test LPs are generated.
"""

from itertools import combinations

import numpy as np

from superhedge.lp import LinearProgram


def _as_leq(lp):
    """All constraints (rows and bounds) as G x <= h plus equality rows E x = f."""
    G, h, E, f = [], [], [], []
    for a, s, b in zip(lp.A, lp.senses, lp.b):
        if s == "<=":
            G.append(a); h.append(b)
        elif s == ">=":
            G.append(-a); h.append(-b)
        else:
            E.append(a); f.append(b)
    n = lp.num_vars
    for j in range(n):
        e = np.zeros(n); e[j] = 1.0
        if np.isfinite(lp.lb[j]):
            G.append(-e); h.append(-lp.lb[j])
        if np.isfinite(lp.ub[j]):
            G.append(e); h.append(lp.ub[j])
    return (np.array(G).reshape(-1, n), np.array(h), np.array(E).reshape(-1, n), np.array(f))


def _independent_rows(E, f):
    keep = []
    for i in range(E.shape[0]):
        trial = keep + [i]
        if np.linalg.matrix_rank(E[trial], tol=1e-9) == len(trial):
            keep.append(i)
    return E[keep], f[keep]


def _vertices(G, h, E, f, tol=1e-9):
    n = G.shape[1]
    E0, f0 = E, f
    E, f = _independent_rows(E, f)
    k = n - E.shape[0]
    out = []
    if k < 0:
        return out
    for active in combinations(range(G.shape[0]), k):
        M = np.vstack([E, G[list(active)]])
        rhs = np.concatenate([f, h[list(active)]])
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, rhs)
        if np.all(G @ x <= h + tol * (1 + np.abs(h))) and np.allclose(E0 @ x, f0, atol=tol):
            out.append(x)
    return out


def oracle(lp):
    """Return (status, value) with status in {'optimal', 'infeasible', 'unbounded'}."""
    assert np.all(np.isfinite(lp.lb)), "oracle needs pointed feasible sets"
    G, h, E, f = _as_leq(lp)
    verts = _vertices(G, h, E, f)
    if not verts:
        return "infeasible", None
    sign = 1.0 if lp.maximize else -1.0
    n = lp.num_vars
    # extreme rays: vertices of {G d <= 0, E d = 0, sum d = 1} (d >= 0 is among G rows)
    Er = np.vstack([E, np.ones((1, n))])
    fr = np.concatenate([np.zeros(E.shape[0]), [1.0]])
    for d in _vertices(G, np.zeros_like(h), Er, fr):
        if sign * (lp.c @ d) > 1e-9:
            return "unbounded", None
    vals = [sign * (lp.c @ x) for x in verts]
    return "optimal", sign * max(vals)


def random_lp(rng, n=None, m=None):
    """Small integer LP with every variable bounded below."""
    n = n or int(rng.integers(1, 7))
    m = m or int(rng.integers(1, 9))
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    b = rng.integers(-3, 6, size=m).astype(float)
    senses = list(rng.choice(["<=", ">=", "="], size=m, p=[0.6, 0.25, 0.15]))
    c = rng.integers(-3, 4, size=n).astype(float)
    lb = rng.integers(-2, 1, size=n).astype(float)
    ub = np.where(rng.random(n) < 0.3, lb + rng.integers(1, 4, size=n), np.inf)
    return LinearProgram(c=c, A=A, senses=senses, b=b, lb=lb, ub=ub, maximize=bool(rng.random() < 0.5))
