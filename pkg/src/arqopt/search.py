"""Scalar search helpers shared by the optimizers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

__all__ = ["SearchResult", "golden_section_max", "bisect_monotone"]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchResult:
    """Location and value of the maximum, plus solver diagnostics."""

    x: float
    fx: float
    iterations: int
    bracket_width: float
    unimodal_ok: bool


def golden_section_max(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float,
    max_iter: int = 256,
) -> SearchResult:
    """Golden-section maximization of f over [lo, hi].

    A three-point probe flags objectives that look non-unimodal (middle
    strictly below both neighbours).  The search still runs in that case,
    since sampled objectives carry small dents; the flag is surfaced on the
    result for the caller to report.
    """
    if not hi > lo:
        raise ValueError(f"need lo < hi, got [{lo!r}, {hi!r}]")
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    probes = [lo + frac * (hi - lo) for frac in (0.25, 0.5, 0.75)]
    p0, p1, p2 = (f(x) for x in probes)
    unimodal_ok = not (p1 < p0 and p1 < p2)

    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    iterations = 0
    while hi - lo > tol and iterations < max_iter:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = f(d)
        iterations += 1
    x = 0.5 * (lo + hi)
    return SearchResult(
        x=x,
        fx=f(x),
        iterations=iterations,
        bracket_width=hi - lo,
        unimodal_ok=unimodal_ok,
    )


def bisect_monotone(
    f: Callable[[float], float],
    target: float,
    lo: float,
    hi: float,
    xtol: float,
) -> float:
    """Largest x in [lo, hi] with f(x) <= target, for nondecreasing f.

    Coincides with the root of f(x) = target when f is continuous and
    strictly increasing; on step functions it settles on the jump location
    to within xtol.

    Raises:
        ValueError: if f(lo) already exceeds the target.
    """
    if f(lo) > target:
        raise ValueError(f"target {target!r} not reachable at lower endpoint {lo!r}")
    if f(hi) <= target:
        return hi
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if f(mid) <= target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
