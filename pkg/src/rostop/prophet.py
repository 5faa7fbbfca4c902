"""Expectation of the offline maximum over one instance.

The maximum of ``n`` iid draws of ``V`` together with the constant ``a``
takes one of three values: ``n`` when at least one draw hits the top atom,
else ``b`` when at least one draw hits the ``b`` atom, else ``a``.  The
finite-size expectation is therefore

    n*(1 - (1-1/n^2)^n) + b*((1-1/n^2)^n - (1-p/n-1/n^2)^n) + a*(1-p/n-1/n^2)^n

and its large-size limit is ``1 + b(1-e^{-p}) + a e^{-p}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .instance import InstanceParams, ParameterError

__all__ = ["ProphetValue", "prophet_exact", "prophet_limit", "prophet_value"]


@dataclass(frozen=True)
class ProphetValue:
    """Finite-size expectation of the maximum and its large-size limit."""

    exact: float
    limit: float
    n: int


def prophet_exact(inst: InstanceParams) -> float:
    """E[max of the instance] at finite size ``n``.

    Three-case law of the maximum (value ``n``, else ``b``, else ``a``),
    valid because the support is ordered ``a < b < n``.  The powers go
    through exp(n*log1p(-x)) (the direct power of the rounded base loses
    ~n ulps at n = 10^6), and the top-value probability 1-(1-1/n^2)^n is
    taken from expm1 directly: forming it by subtraction would cancel down
    to ~n ulps absolute after the multiplication by n.
    """
    n, a, b, p = inst.n, inst.a, inst.b, inst.p
    if not a < b < n:
        raise ParameterError(f"law of the maximum needs a < b < n, got ({a}, {b}, {n})")
    some_top = -math.expm1(n * math.log1p(-1.0 / (n * n)))  # P(max = n)
    all_zero = math.exp(n * math.log1p(-(p / n + 1.0 / (n * n))))
    no_top = 1.0 - some_top
    return n * some_top + b * (no_top - all_zero) + a * all_zero


def prophet_limit(a: float, b: float, p: float) -> float:
    """Large-size limit ``1 + b(1-e^{-p}) + a e^{-p}``."""
    if not (a > 0 and b > 0 and p > 0):
        raise ParameterError("a, b, p must be positive")
    e = math.exp(-p)
    return 1.0 + b * (1.0 - e) + a * e


def prophet_value(inst: InstanceParams) -> ProphetValue:
    return ProphetValue(
        exact=prophet_exact(inst),
        limit=prophet_limit(inst.a, inst.b, inst.p),
        n=inst.n,
    )
