"""One-dimensional search primitives shared by the solvers."""

from __future__ import annotations

import math
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import brentq

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def linear_grid(lo: float, hi: float, n_intervals: int) -> np.ndarray:
    return np.linspace(lo, hi, int(n_intervals) + 1)


def scan_grid(lo: float, hi: float, n_intervals: int, anchors: Iterable[float] = ()) -> np.ndarray:
    """Uniform grid plus geometric clusters around ``lo`` and each anchor.

    The clusters resolve roots that sit close to the lower bound or to a
    branch point on wide (capped) domains.
    """
    width = hi - lo
    pts = [linear_grid(lo, hi, n_intervals)]
    if width > 0:
        offsets = np.geomspace(width * 1e-7, width, max(8, n_intervals // 4))
        for c in (lo, *anchors):
            if c is None or not (lo <= c <= hi):
                continue
            pts.append(np.array([c]))
            pts.append(np.clip(c + offsets, lo, hi))
            pts.append(np.clip(c - offsets, lo, hi))
    return np.unique(np.concatenate(pts))


def grid_argmax(values: np.ndarray, tol: float) -> tuple[int, bool]:
    """Index of the first grid maximum and whether it is unique.

    A maximum is non-unique when another grid value within ``tol`` of it
    lies more than two cells away.
    """
    v = np.where(np.isnan(values), -np.inf, values)
    if not np.any(np.isfinite(v)):
        raise ValueError("no finite values on the grid")
    idx = int(np.argmax(v))
    near = np.flatnonzero(v >= v[idx] - tol)
    return idx, bool(np.all(np.abs(near - idx) <= 2))


def golden_max(f: Callable[[float], float], a: float, b: float, tol: float, max_iter: int = 200):
    """Maximise a unimodal ``f`` on ``[a, b]`` by golden-section search."""
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def golden_max_vec(f: Callable[[np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray, iters: int = 80):
    """Elementwise golden-section maximisation; ``f`` maps arrays to arrays.

    Returns the final brackets ``(a, b)`` and the best interior point.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)

    def g(x):
        y = f(x)
        return np.where(np.isnan(y), -np.inf, y)

    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = g(c), g(d)
    for _ in range(iters):
        left = fc >= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c_new = np.where(left, b - INVPHI * (b - a), d)
        d_new = np.where(left, c, a + INVPHI * (b - a))
        probe = np.where(left, c_new, d_new)
        fp = g(probe)
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
        c, d = c_new, d_new
    best = np.where(fc >= fd, c, d)
    return a, b, best


def bisect(
    f: Callable[[float], float],
    a: float,
    b: float,
    fa: float | None = None,
    fb: float | None = None,
    xtol: float = 0.0,
    max_iter: int = 200,
) -> float:
    """Root of ``f`` in ``[a, b]`` given a sign change at the ends.

    Runs until the bracket is no wider than ``xtol`` or can no longer be
    halved in floating point.
    """
    fa = f(a) if fa is None else fa
    fb = f(b) if fb is None else fb
    if fa == 0:
        return a
    if fb == 0:
        return b
    if (fa > 0) == (fb > 0):
        raise ValueError(f"no sign change on [{a}, {b}]")
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        if m in (a, b) or b - a <= xtol:
            break
        fm = f(m)
        if fm == 0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b, fb = m, fm
    return a if abs(fa) <= abs(fb) else b


def bracketed_root(f: Callable[[float], float], a: float, b: float, fa: float, fb: float, max_iter: int = 200) -> float:
    """Root of ``f`` in ``[a, b]`` given a sign change, by Brent's method at full precision."""
    if fa == 0:
        return a
    if fb == 0:
        return b
    return brentq(f, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=max_iter)


def bisect_vec(g: Callable[[np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray, iters: int = 64) -> np.ndarray:
    """Elementwise bisection for ``g(a) > 0 > g(b)`` brackets."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    for _ in range(iters):
        m = 0.5 * (a + b)
        pos = g(m) > 0
        a = np.where(pos, m, a)
        b = np.where(pos, b, m)
    return 0.5 * (a + b)


def sign_changes(fs: np.ndarray) -> np.ndarray:
    """Indices ``i`` where ``fs[i]`` and ``fs[i+1]`` are finite with opposite signs."""
    f0, f1 = fs[:-1], fs[1:]
    ok = np.isfinite(f0) & np.isfinite(f1)
    return np.flatnonzero(ok & (np.sign(f0) * np.sign(f1) < 0))


def near_zero_runs(fs: np.ndarray, tol: float) -> list[int]:
    """Best index of every run of consecutive grid points with ``|f| <= tol``."""
    hits = np.flatnonzero(np.isfinite(fs) & (np.abs(fs) <= tol))
    out: list[int] = []
    run: list[int] = []
    for i in hits:
        if run and i != run[-1] + 1:
            out.append(min(run, key=lambda j: abs(fs[j])))
            run = []
        run.append(int(i))
    if run:
        out.append(min(run, key=lambda j: abs(fs[j])))
    return out


def rk4_step(f: Callable[[float], float], y: float, dt: float) -> float:
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
