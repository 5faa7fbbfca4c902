"""Closed-form asymptotics of the backward-induction analysis.

Contents:

* the limits ``lambda*`` and ``mu*`` of the normalised acceptance times
  ``j_n/n`` and ``k_n/n``;
* the exponential quadratic ``q(lambda, mu, nu)`` whose maximum over
  ``nu in [mu*, lambda*]`` yields the hardness bound, together with its
  first three derivatives in ``nu`` (after substituting ``lambda = lambda*``);
* the large-size conditional expectations of the stopped value given the
  arrival position of the constant, and the four segment sums whose total
  telescopes exactly to ``q``;
* the index ``k*`` and the finite-size sandwich diagnostics: an iterative
  lower bound on ``phibar`` from step ``k_n - 1`` on, and the linear upper
  bound ``a + (n-k)/2 * (1+(b-a)p)/n`` from step ``j_n`` on.

The sandwich inequalities are asymptotic statements, so the diagnostics
never hard-fail: each check reports its worst margin over the examined
index range and a pass flag.  The lower bound is an exact identity for the
recursion on ``k >= j_n`` and the upper bound's true margin at ``k = n-1``
is ``a/(2n^2)``, so at large sizes both margins sit at the accumulated
rounding floor of an n-step recursion; the sign test therefore allows
``SIGN_TOLERANCE`` of float noise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dp import AcceptanceTimes, ThresholdTables
from .instance import InstanceParams, InfeasibleInstanceError, ParameterError, validate

__all__ = [
    "SIGN_TOLERANCE",
    "AsymptoticProfile",
    "DiagnosticCheck",
    "DiagnosticsReport",
    "OrderingError",
    "ConsistencyError",
    "lambda_mu_star",
    "q_eval",
    "q_derivatives",
    "conditional_expectation_asymptotic",
    "partial_sums",
    "k_star",
    "verify_bound_sandwich",
]

# Float-noise allowance for sandwich sign checks; covers ~n*2^-52 recursion
# drift up to n ~ 10^7 with an order of magnitude to spare.
SIGN_TOLERANCE = 1e-9

# Tail-sum length below which the lower-bound weights are summed directly;
# longer tails use the closed form, whose cancellation error is negligible
# exactly where the direct sum would be long.
_DIRECT_SUM_CUTOFF = 512


class OrderingError(ValueError):
    """Acceptance times violate k_n <= kbar_n <= j_n, so the case split is invalid."""


class ConsistencyError(RuntimeError):
    """Two internally equivalent evaluations disagree; signals a transcription bug."""


@dataclass(frozen=True)
class AsymptoticProfile:
    """Limits of the normalised acceptance times for one parameter triple."""

    a: float
    b: float
    p: float
    lambda_star: float
    mu_star: float


@dataclass(frozen=True)
class DiagnosticCheck:
    check: str
    k_lo: int
    k_hi: int
    worst_margin: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "check": self.check,
            "k_lo": self.k_lo,
            "k_hi": self.k_hi,
            "worst_margin": self.worst_margin,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class DiagnosticsReport:
    checks: tuple[DiagnosticCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> DiagnosticCheck:
        for c in self.checks:
            if c.check == name:
                return c
        raise KeyError(name)

    def to_json(self) -> str:
        return json.dumps([c.as_dict() for c in self.checks])


def lambda_mu_star(a: float, b: float, p: float) -> AsymptoticProfile:
    """Limits ``lambda* = 1 + log((1+(b-a)p)/(1+bp))/p`` and ``mu* = 1 - log(1+bp)/p``.

    Requires a feasible triple; under feasibility ``0 < mu* < lambda* < 1``
    (the log condition gives ``mu* > 0``; ``a < b`` gives the gap).  ``mu*``
    does not involve ``a``.
    """
    report = validate(a, b, p)
    if not report.passed:
        raise InfeasibleInstanceError(report)
    lam = 1.0 + (math.log1p((b - a) * p) - math.log1p(b * p)) / p
    mu = 1.0 - math.log1p(b * p) / p
    return AsymptoticProfile(a=a, b=b, p=p, lambda_star=lam, mu_star=mu)


def q_eval(a: float, b: float, p: float, lam: float, mu: float, nu: float) -> float:
    """The six-term exponential quadratic ``q_{a,b,p}(lambda, mu, nu)``."""
    ib = 1.0 / p + b
    return (
        mu * mu / 2.0
        - nu * nu / 2.0
        + nu
        + ib
        + (1.0 / p - mu) * ib * math.exp(p * (mu - 1.0))
        + (ib * (nu - lam) - a / p) * math.exp(p * (nu - 1.0))
        - (1.0 / p) * (ib - a) * math.exp(p * (nu - lam))
    )


def _q1_raw(a: float, b: float, p: float, lam: float, nu):
    # Simplified first derivative in nu, valid once lambda is pinned at
    # lambda*(a, b, p); vectorises over nu.
    return 1.0 - nu + ((1.0 + b * p) * (nu - lam) - a) * np.exp(p * (nu - 1.0))


def q_derivatives(
    a: float, b: float, p: float, lambda_star: float, nu: float
) -> tuple[float, float, float]:
    """First three nu-derivatives of ``q(lambda*, mu*, nu)`` on ``[mu*, lambda*]``.

    The simplified forms absorb the identity
    ``(1/p + b - a) e^{p(nu - lambda*)} = (1/p + b) e^{p(nu - 1)}``, which
    holds only at the true ``lambda*``; every call re-evaluates the
    unsimplified derivative and raises :class:`ConsistencyError` if the two
    disagree beyond 1e-12, so a wrong ``lambda_star`` cannot pass silently.
    """
    mu_star = 1.0 - math.log1p(b * p) / p
    if not mu_star <= nu <= lambda_star:
        raise ParameterError(
            f"nu={nu!r} outside [mu*, lambda*] = [{mu_star!r}, {lambda_star!r}]"
        )
    e1 = math.exp(p * (nu - 1.0))
    bp1 = 1.0 + b * p
    q1 = 1.0 - nu + (bp1 * (nu - lambda_star) - a) * e1
    q1_unsimplified = (
        1.0
        - nu
        + ((1.0 / p + b) + bp1 * (nu - lambda_star) - a) * e1
        - (1.0 / p + b - a) * math.exp(p * (nu - lambda_star))
    )
    if abs(q1 - q1_unsimplified) > 1e-12:
        raise ConsistencyError(
            "simplified and unsimplified q' disagree: "
            f"{q1!r} vs {q1_unsimplified!r} (is lambda_star correct?)"
        )
    q2 = -1.0 + (1.0 + p * (b - a + bp1 * (nu - lambda_star))) * e1
    q3 = p * (2.0 + p * (2.0 * b - a + bp1 * (nu - lambda_star))) * e1
    return q1, q2, q3


def conditional_expectation_asymptotic(
    inst: InstanceParams, times: AcceptanceTimes, i: int
) -> float:
    """Large-size ``E[stopped value | constant arrives at position i]``.

    Piecewise in ``i`` with breakpoints at ``k_n``, ``kbar_n`` and ``j_n``;
    all O(1/n) corrections are dropped.  Requires the eventual ordering
    ``k_n <= kbar_n <= j_n``.
    """
    if not times.k_n <= times.kbar_n <= times.j_n:
        raise OrderingError(
            f"need k_n <= kbar_n <= j_n, got ({times.k_n}, {times.kbar_n}, {times.j_n})"
        )
    n = inst.n
    if not 1 <= i <= n + 1:
        raise IndexError(f"position {i} out of range [1, {n + 1}]")
    a, b, p = inst.a, inst.b, inst.p
    ib = 1.0 / p + b
    mu, nu = times.mu_n, times.nu_n
    if i < times.k_n:
        return mu + ib * (1.0 - math.exp(p * (mu - 1.0)))
    if i < times.kbar_n:
        x = i / n
        return x + ib * (1.0 - math.exp(p * (x - 1.0)))
    if i < times.j_n:
        return nu + ib * (1.0 - math.exp(p * (nu - 1.0)))
    e = math.exp(p * (nu - i / n))
    return nu + ib * (1.0 - e) + a * e


def partial_sums(
    inst: InstanceParams, times: AcceptanceTimes
) -> tuple[float, float, float, float]:
    """Asymptotic values of the four position segments of the total expectation.

    Segments: positions before ``k_n``, in ``[k_n, kbar_n)``, in
    ``[kbar_n, j_n)`` and from ``j_n`` on (empty-sum convention: an empty
    segment contributes exactly 0).  Their sum telescopes algebraically to
    ``q(lambda_n, mu_n, nu_n)``; this identity is re-verified on every call
    to 1e-10 and a violation raises :class:`ConsistencyError`.
    """
    if not times.k_n <= times.kbar_n <= times.j_n:
        raise OrderingError(
            f"need k_n <= kbar_n <= j_n, got ({times.k_n}, {times.kbar_n}, {times.j_n})"
        )
    a, b, p = inst.a, inst.b, inst.p
    ib = 1.0 / p + b
    lam, mu, nu = times.lambda_n, times.mu_n, times.nu_n

    s1 = mu * mu + mu * ib * (1.0 - math.exp(p * (mu - 1.0)))
    s2 = (
        nu * nu / 2.0
        - mu * mu / 2.0
        + ib * (nu - mu)
        - (math.exp(-p) / p) * ib * (math.exp(p * nu) - math.exp(p * mu))
    )
    s3 = -nu * nu + lam * nu + (lam - nu) * ib * (1.0 - math.exp(p * (nu - 1.0)))
    s4 = (
        -lam * nu
        + nu
        + ib * (1.0 - lam)
        - (1.0 / p) * (ib - a) * (math.exp(-p * (lam - nu)) - math.exp(-p * (1.0 - nu)))
    )

    total = s1 + s2 + s3 + s4
    q = q_eval(a, b, p, lam, mu, nu)
    if abs(total - q) > 1e-10:
        raise ConsistencyError(f"segment total {total!r} != q {q!r}")
    return s1, s2, s3, s4


def k_star(a: float, b: float, p: float, n: int) -> int:
    """``ceil(n * (1-(2-p)(b-a)) / (1+p(b-a)))``: first index where the upper
    bound on ``phibar`` falls to ``b``.  Positivity needs condition II."""
    if not (2.0 - p) * (b - a) < 1.0:
        raise ParameterError(
            f"condition II fails: (2-p)(b-a) = {(2.0 - p) * (b - a)!r} >= 1"
        )
    return math.ceil(n * (1.0 - (2.0 - p) * (b - a)) / (1.0 + p * (b - a)))


def _lower_bound_tail_sums(n: int, eps: float, lengths: np.ndarray) -> np.ndarray:
    """S(L) = sum_{j=0}^{L-1} ((L-j)/(L+1)) * (1-eps)^j for each tail length L.

    Short tails are summed directly (the closed form cancels catastrophically
    when L*eps is small); long tails use the closed form, where the direct
    sum would be the expensive and less accurate route.
    """
    out = np.empty(lengths.shape, dtype=float)

    small = lengths <= _DIRECT_SUM_CUTOFF
    if small.any():
        lmax = int(lengths[small].max())
        q = 1.0 - eps
        qpow = np.concatenate(([1.0], np.cumprod(np.full(lmax - 1, q)))) if lmax > 1 else np.ones(1)
        partial_geom = np.concatenate(([0.0], np.cumsum(qpow)))  # G[r] = sum_{j<r} q^j
        nested = np.cumsum(partial_geom[1:])  # nested[L-1] = sum_{r=1}^{L} G[r]
        ls = lengths[small]
        out[small] = nested[ls - 1] / (ls + 1.0)

    big = ~small
    if big.any():
        ls = lengths[big].astype(float)
        qpow = np.exp(ls * math.log1p(-eps))
        out[big] = (1.0 - qpow) / eps - (1.0 - qpow * (ls * eps + 1.0)) / (
            (ls + 1.0) * eps * eps
        )
    return out


def verify_bound_sandwich(
    inst: InstanceParams, tables: ThresholdTables, times: AcceptanceTimes
) -> DiagnosticsReport:
    """Check the finite-size sandwich on ``phibar`` and the index ordering.

    * ``lower_bound``: ``phibar[k] >= a + ((1+(b-a)p)/n - a/n^2) * S(n-k)``
      for ``k in [k_n - 1, n - 1]``;
    * ``upper_bound``: ``phibar[k] <= a + (n-k)/2 * (1+(b-a)p)/n``
      for ``k in [j_n, n - 1]``;
    * ``ordering``: ``k_n <= kbar_n <= k*``;
    * ``kstar_below_j``: ``k* < j_n``.

    Margins are signed so that nonnegative means the claim holds; the two
    float-valued checks pass within ``-SIGN_TOLERANCE`` (see module notes),
    the two integer checks are exact.
    """
    n = inst.n
    a, b, p = inst.a, inst.b, inst.p
    checks = []

    eps = p / n + 1.0 / (n * n)
    coeff = (1.0 + (b - a) * p) / n - a / (n * n)

    k_lo = max(1, times.k_n - 1)
    if k_lo <= n - 1:
        ks = np.arange(k_lo, n)
        tails = (n - ks).astype(np.int64)
        lower = a + coeff * _lower_bound_tail_sums(n, eps, tails)
        lower_margin = float(np.min(tables.phibar[k_lo:n] - lower))
    else:
        lower_margin = math.inf
    checks.append(
        DiagnosticCheck(
            "lower_bound", k_lo, n - 1, lower_margin, lower_margin >= -SIGN_TOLERANCE
        )
    )

    if times.j_n <= n - 1:
        ks = np.arange(times.j_n, n)
        upper = a + (n - ks) / 2.0 * (1.0 + (b - a) * p) / n
        upper_margin = float(np.min(upper - tables.phibar[times.j_n : n]))
    else:
        upper_margin = math.inf
    checks.append(
        DiagnosticCheck(
            "upper_bound", times.j_n, n - 1, upper_margin, upper_margin >= -SIGN_TOLERANCE
        )
    )

    ks_val = k_star(a, b, p, n)
    order_margin = float(min(times.kbar_n - times.k_n, ks_val - times.kbar_n))
    checks.append(
        DiagnosticCheck("ordering", times.k_n, ks_val, order_margin, order_margin >= 0.0)
    )
    sep_margin = float(times.j_n - ks_val)
    checks.append(
        DiagnosticCheck("kstar_below_j", ks_val, times.j_n, sep_margin, sep_margin > 0.0)
    )
    return DiagnosticsReport(checks=tuple(checks))
