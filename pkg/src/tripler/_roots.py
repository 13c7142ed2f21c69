"""Bracketed scalar root finding used by the dispersion and steady-state solvers."""

import numpy as np

from .errors import ConvergenceError


def bisect(f, lo, hi, rtol=1e-12, maxiter=200):
    """Bisection root of ``f`` on ``[lo, hi]``, which must bracket a sign change.

    Runs until the bracket width drops below ``rtol`` relative to its
    midpoint (or ``rtol`` absolute near zero).  Bisection is deliberate:
    no derivative, guaranteed convergence on a bracket.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ConvergenceError(
            f"root not bracketed on [{lo!r}, {hi!r}]: f={flo!r}, {fhi!r}")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= rtol * max(abs(lo), abs(hi), 1e-300):
            break
    else:
        raise ConvergenceError(
            "bisection did not converge",
            diagnostics={"bracket": (lo, hi), "residual": fm})
    return 0.5 * (lo + hi)


def bracket_roots(f_values, grid):
    """Brackets ``(grid[i], grid[i+1])`` where tabulated ``f_values`` change sign.

    Exact zeros at grid nodes are returned as degenerate brackets.
    """
    brackets = []
    for i in range(len(grid) - 1):
        a, b = f_values[i], f_values[i + 1]
        if a == 0.0:
            brackets.append((grid[i], grid[i]))
        elif np.sign(a) != np.sign(b) and b != 0.0:
            brackets.append((grid[i], grid[i + 1]))
    if len(f_values) and f_values[-1] == 0.0:
        brackets.append((grid[-1], grid[-1]))
    return brackets
