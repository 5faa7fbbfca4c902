"""Certified hardness bound from the interval maximum of ``q``.

The bound on the optimal rule's ratio is ``M(a,b,p) = m / L`` where
``m = max_{nu in [mu*, lambda*]} q(lambda*, mu*, nu)`` and ``L`` is the
large-size expectation of the offline maximum.  Since ``q'`` is convex on
the interval and ``q'(lambda*) <= 0`` under condition I, only two shapes
are possible: ``q'`` nonpositive throughout (maximum at ``mu*``) or a
single interior zero ``nu*`` located by bracketing bisection.

Bisection is used deliberately instead of a faster root finder: the error
certificate rests on its bracket guarantee.  The returned ``nu_hat`` is the
midpoint of the final bracket, so ``|nu_hat - nu*|`` is at most half the
final width; that half-width is reported as ``nu_error_bound`` (it is never
larger than ``xtol + |nu_hat| * rtol``).  Because ``|q'| < 1`` on the
bracket neighbourhood (checked explicitly on a fine grid, with convexity
of ``q'`` covering the gaps), the same bound dominates ``|q(nu_hat) - m|``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .asymptotics import ConsistencyError, _q1_raw, lambda_mu_star, q_derivatives, q_eval
from .prophet import prophet_limit

__all__ = [
    "BracketError",
    "MaxIterationsError",
    "CertificationError",
    "HardnessBound",
    "ErrorCertificate",
    "bisect_qprime",
    "hardness_bound",
    "certify",
]

DEFAULT_XTOL = 1e-13
DEFAULT_RTOL = 1e-14
_CERT_GRID_POINTS = 100_000


class BracketError(ValueError):
    """The function does not change sign on the interval; use the monotone
    endpoint maximum instead of bisection."""


class MaxIterationsError(RuntimeError):
    """Bisection failed to meet tolerance within the iteration budget."""


class CertificationError(RuntimeError):
    """The |q'| < 1 neighbourhood check failed; the error chain does not close."""


@dataclass(frozen=True)
class HardnessBound:
    """Result of the maximisation with its numeric error certificate."""

    a: float
    b: float
    p: float
    lambda_star: float
    mu_star: float
    nu_hat: float
    m: float
    M: float
    case: str  # "interior" or "monotone"
    nu_error_bound: float
    q_error_bound: float
    iterations: int
    xtol: float = DEFAULT_XTOL
    rtol: float = DEFAULT_RTOL

    def to_json(self) -> str:
        return json.dumps(
            {
                "a": self.a,
                "b": self.b,
                "p": self.p,
                "lambda_star": self.lambda_star,
                "mu_star": self.mu_star,
                "nu_hat": self.nu_hat,
                "m": self.m,
                "M": self.M,
                "case": self.case,
                "nu_error_bound": self.nu_error_bound,
                "q_error_bound": self.q_error_bound,
                "iterations": self.iterations,
            }
        )


@dataclass(frozen=True)
class ErrorCertificate:
    """Re-derived error chain for a computed bound."""

    nu_error_bound: float
    qprime_sup: float
    q_error_bound: float
    grid_points: int
    qprime_convex: bool
    trivially_exact: bool


def _bisect(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    xtol: float,
    rtol: float,
    max_iter: int,
) -> tuple[float, int, float]:
    """Bracketing bisection for ``fn`` with ``fn(lo) > 0 >= fn(hi)``.

    Terminates once the bracket width is at most ``xtol + |mid| * rtol``
    and returns ``(midpoint, halvings, final half-width)``.  The sign
    invariant ``fn(lo) > 0 >= fn(hi)`` holds throughout.
    """
    flo, fhi = fn(lo), fn(hi)
    if not (flo > 0.0 >= fhi):
        raise BracketError(
            f"no sign change: fn(lo)={flo!r}, fn(hi)={fhi!r}; "
            "the interval maximum sits at an endpoint (monotone case)"
        )
    iterations = 0
    while True:
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol + abs(mid) * rtol:
            return mid, iterations, 0.5 * (hi - lo)
        if iterations >= max_iter:
            raise MaxIterationsError(
                f"tolerance not reached after {max_iter} halvings (width {hi - lo!r})"
            )
        iterations += 1
        if fn(mid) > 0.0:
            lo = mid
        else:
            hi = mid


def bisect_qprime(
    a: float,
    b: float,
    p: float,
    xtol: float = DEFAULT_XTOL,
    rtol: float = DEFAULT_RTOL,
    max_iter: int = 200,
) -> tuple[float, int]:
    """Locate the interior zero of ``q'`` on ``[mu*, lambda*]``.

    Requires a sign change (``q'(mu*) > 0 >= q'(lambda*)``); raises
    :class:`BracketError` pointing the caller at the monotone case
    otherwise.  About ``log2((lambda*-mu*)/xtol) ~ 42`` halvings suffice at
    the default tolerances.
    """
    prof = lambda_mu_star(a, b, p)
    f = lambda nu: q_derivatives(a, b, p, prof.lambda_star, nu)[0]
    nu_hat, iterations, _ = _bisect(f, prof.mu_star, prof.lambda_star, xtol, rtol, max_iter)
    return nu_hat, iterations


def _sup_abs_qprime(
    a: float, b: float, p: float, lam: float, lo: float, hi: float
) -> tuple[float, int]:
    """Grid supremum of ``|q'|`` over ``[lo, hi]`` (endpoints included)."""
    grid = np.linspace(lo, hi, _CERT_GRID_POINTS)
    return float(np.max(np.abs(_q1_raw(a, b, p, lam, grid)))), _CERT_GRID_POINTS


def _maximise_q(
    a: float,
    b: float,
    p: float,
    lam: float,
    mu: float,
    xtol: float,
    rtol: float,
) -> tuple[str, float, float, int, float]:
    """Maximise ``nu -> q(lam, mu, nu)`` over ``[mu, lam]``.

    Returns ``(case, nu_hat, m, iterations, nu_error_bound)``.  ``q'`` must
    be nonincreasing-then-at-most-zero in the convex sense established on
    the interval: ``q'(lam) <= 0`` is asserted, and ``q'(mu) <= 0`` selects
    the monotone endpoint case.
    """
    q1_hi = q_derivatives(a, b, p, lam, lam)[0]
    if q1_hi > 0.0:
        raise ConsistencyError(
            f"q'(lambda*) = {q1_hi!r} > 0 despite condition I; "
            "this signals a bug in the derivative or the validation"
        )
    q1_lo = q_derivatives(a, b, p, lam, mu)[0]
    if q1_lo <= 0.0:
        # q is nonincreasing on the whole interval: maximum at the left end,
        # no root finding and hence no numerical error to certify.
        return "monotone", mu, q_eval(a, b, p, lam, mu, mu), 0, 0.0
    f = lambda nu: q_derivatives(a, b, p, lam, nu)[0]
    nu_hat, iterations, half_width = _bisect(f, mu, lam, xtol, rtol, max_iter=200)
    return "interior", nu_hat, q_eval(a, b, p, lam, mu, nu_hat), iterations, half_width


def hardness_bound(
    a: float,
    b: float,
    p: float,
    xtol: float = DEFAULT_XTOL,
    rtol: float = DEFAULT_RTOL,
) -> HardnessBound:
    """Full bound procedure: limits, interval maximum of ``q``, ratio, certificate.

    Deterministic: identical inputs give bit-identical results.
    """
    prof = lambda_mu_star(a, b, p)
    case, nu_hat, m, iterations, nu_err = _maximise_q(
        a, b, p, prof.lambda_star, prof.mu_star, xtol, rtol
    )
    if case == "interior":
        sup, _ = _sup_abs_qprime(
            a, b, p, prof.lambda_star, nu_hat - nu_err, nu_hat + nu_err
        )
        if sup >= 1.0:
            raise CertificationError(
                f"|q'| reaches {sup!r} >= 1 near nu_hat; error chain does not close"
            )
        q_err = sup * nu_err
    else:
        q_err = 0.0
    return HardnessBound(
        a=a,
        b=b,
        p=p,
        lambda_star=prof.lambda_star,
        mu_star=prof.mu_star,
        nu_hat=nu_hat,
        m=m,
        M=m / prophet_limit(a, b, p),
        case=case,
        nu_error_bound=nu_err,
        q_error_bound=q_err,
        iterations=iterations,
        xtol=xtol,
        rtol=rtol,
    )


def certify(bound: HardnessBound) -> ErrorCertificate:
    """Re-derive the error chain of a computed bound.

    Interior case: checks ``nu_error_bound <= xtol + |nu_hat| * rtol``,
    evaluates ``sup |q'|`` over ``[nu_hat - e, nu_hat + e]`` on a fine grid,
    confirms convexity of ``q'`` there (third derivative positive at both
    endpoints, so the grid cannot hide an interior spike of the maximum of
    ``q'``), and concludes ``|q(nu_hat) - max q| <= sup * e < e``.  Raises
    :class:`CertificationError` when ``sup >= 1``.

    Monotone case: the maximiser is the closed-form endpoint, so the
    certificate is trivially exact.
    """
    if bound.case == "monotone":
        return ErrorCertificate(
            nu_error_bound=0.0,
            qprime_sup=0.0,
            q_error_bound=0.0,
            grid_points=0,
            qprime_convex=True,
            trivially_exact=True,
        )
    e = bound.nu_error_bound
    claim = bound.xtol + abs(bound.nu_hat) * bound.rtol
    if not e <= claim:
        raise CertificationError(
            f"nu_error_bound {e!r} exceeds the bisection guarantee {claim!r}"
        )
    sup, grid_points = _sup_abs_qprime(
        bound.a, bound.b, bound.p, bound.lambda_star, bound.nu_hat - e, bound.nu_hat + e
    )
    if sup >= 1.0:
        raise CertificationError(
            f"|q'| reaches {sup!r} >= 1 on the certified interval"
        )
    q3_lo = q_derivatives(bound.a, bound.b, bound.p, bound.lambda_star, bound.nu_hat - e)[2]
    q3_hi = q_derivatives(bound.a, bound.b, bound.p, bound.lambda_star, bound.nu_hat + e)[2]
    return ErrorCertificate(
        nu_error_bound=e,
        qprime_sup=sup,
        q_error_bound=sup * e,
        grid_points=grid_points,
        qprime_convex=bool(q3_lo > 0.0 and q3_hi > 0.0),
        trivially_exact=False,
    )
