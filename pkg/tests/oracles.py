"""Independent oracles for the test suite.

Everything here is deliberately written from first principles, sharing no
code path with the package implementations it checks: a generic two-phase
dense tableau simplex for transportation LPs, a double-loop grid distance
builder, a naive correlation filter, and an exhaustive two-level patch
fit.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize_scalar

_TOL = 1e-9


def pairwise_grid_distances(side):
    """Double-loop Euclidean distances between row-major grid indices."""
    length = side * side
    out = np.zeros((length, length))
    for i in range(length):
        for j in range(length):
            u1, v1 = divmod(i, side)
            u2, v2 = divmod(j, side)
            out[i, j] = math.sqrt((u1 - u2) ** 2 + (v1 - v2) ** 2)
    return out


def _pivot(tableau, basis, row, col):
    tableau[row] /= tableau[row, col]
    for r in range(tableau.shape[0]):
        if r != row and tableau[r, col] != 0.0:
            tableau[r] -= tableau[r, col] * tableau[row]
    basis[row] = col


def _simplex_phase(tableau, basis, n_cols, tol):
    """Bland-rule simplex on a tableau whose last row is the objective."""
    m = tableau.shape[0] - 1
    while True:
        col = -1
        for j in range(n_cols):
            if tableau[m, j] < -tol:
                col = j
                break
        if col < 0:
            return
        row = -1
        best = np.inf
        for r in range(m):
            a = tableau[r, col]
            if a > tol:
                ratio = tableau[r, -1] / a
                if ratio < best - tol or (abs(ratio - best) <= tol and (row < 0 or basis[r] < basis[row])):
                    best = ratio
                    row = r
        if row < 0:
            raise RuntimeError("LP unbounded (cannot happen for transportation)")
        _pivot(tableau, basis, row, col)


def tableau_simplex_min(costs, A, b, tol=_TOL):
    """Two-phase dense tableau simplex for min c.x s.t. A x = b, x >= 0."""
    A = np.asarray(A, dtype=np.float64).copy()
    b = np.asarray(b, dtype=np.float64).copy()
    costs = np.asarray(costs, dtype=np.float64)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    tableau = np.zeros((m + 1, n + m + 1))
    tableau[:m, :n] = A
    tableau[:m, n : n + m] = np.eye(m)
    tableau[:m, -1] = b
    basis = list(range(n, n + m))
    # phase-1 objective: minimize the artificial total
    tableau[m] = -tableau[:m].sum(axis=0)
    tableau[m, n : n + m] = 0.0

    _simplex_phase(tableau, basis, n, tol)
    if tableau[m, -1] < -1e-7 * (1.0 + abs(b).max()):
        raise RuntimeError("LP infeasible")

    # phase 2: price the real objective through the current basis
    tableau[m, :] = 0.0
    tableau[m, :n] = costs
    for r in range(m):
        if basis[r] < n and tableau[m, basis[r]] != 0.0:
            tableau[m] -= tableau[m, basis[r]] * tableau[r]
    _simplex_phase(tableau, basis, n, tol)

    x = np.zeros(n)
    for r in range(m):
        if basis[r] < n:
            x[basis[r]] = tableau[r, -1]
    return float(costs @ x), x


def transport_objective_lp(source, target, cost):
    """Transportation optimum via the generic tableau simplex."""
    source = np.asarray(source, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    cost = np.asarray(cost, dtype=np.float64)
    m, n = cost.shape
    A = np.zeros((m + n, m * n))
    b = np.concatenate([source, target])
    for i in range(m):
        A[i, i * n : (i + 1) * n] = 1.0
    for j in range(n):
        A[m + j, j::n] = 1.0
    value, x = tableau_simplex_min(cost.ravel(), A, b)
    return value, x.reshape(m, n)


def correlate_1x3(image, horizontal):
    """Naive [1 0 -1] correlation with replicate padding, double loop."""
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape
    out = np.zeros_like(img)
    for r in range(h):
        for c in range(w):
            if horizontal:
                left = img[r, max(c - 1, 0)]
                right = img[r, min(c + 1, w - 1)]
            else:
                left = img[max(r - 1, 0), c]
                right = img[min(r + 1, h - 1), c]
            out[r, c] = left - right
    return out


def exhaustive_two_color(pixels, w1):
    """Brute-force two-level fit over every binary mask of a small patch.

    ``w1(source_flat, target_flat)`` evaluates the transport distance.  For
    a mask z with k upper pixels, mass conservation pins the lower level,
    and the upper level is optimized over its feasible interval.  A coarse
    pass scores every mask orientation; the near-optimal ones are then
    refined at high precision, which convexity in the level makes safe.
    Returns the best distance found.
    """
    pix = np.asarray(pixels, dtype=np.float64).ravel()
    length = pix.size
    total = float(pix.sum())
    mean = total / length

    flat = w1(pix, np.full(length, mean))

    def level_value(z, k, xatol):
        lo, hi = mean, total / k

        def value(a):
            b = max((total - a * k) / (length - k), 0.0)
            return w1(pix, np.where(z, a, b))

        candidates = [flat]
        class_mean = float(pix[z].mean())
        if lo <= class_mean <= hi:
            candidates.append(value(class_mean))
        if hi > lo:
            res = minimize_scalar(
                value, bounds=(lo, hi), method="bounded", options={"xatol": xatol * (hi - lo)}
            )
            candidates.append(float(res.fun))
        else:
            candidates.append(value(hi))
        return min(candidates)

    # masks containing pixel 0, with either class as the upper level, cover
    # every (partition, orientation) pair exactly once
    scored = []
    for bits in range(1, 2**length, 2):
        z = np.array([(bits >> p) & 1 for p in range(length)], dtype=bool)
        k = int(z.sum())
        if k <= length - 1:
            scored.append((level_value(z, k, 5e-3), bits, False))
            scored.append((level_value(~z, length - k, 5e-3), bits, True))

    best = flat
    coarse_best = min(d for d, _, _ in scored)
    for d, bits, flipped in scored:
        if d <= coarse_best * 1.05 + 1e-12:
            z = np.array([(bits >> p) & 1 for p in range(length)], dtype=bool)
            if flipped:
                z = ~z
            best = min(best, level_value(z, int(z.sum()), 1e-8))
    return best


def shannon_entropy_bits(masses):
    """Direct entropy of a normalized mass vector."""
    p = np.asarray(masses, dtype=np.float64)
    total = p.sum()
    if total <= 0:
        raise ValueError("no mass")
    p = p / total
    return float(-sum(x * math.log2(x) for x in p if x > 0))
