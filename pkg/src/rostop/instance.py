"""Hard-instance family for random-order stopping.

An instance of size ``n`` consists of ``n`` iid copies of a three-point
random value ``V`` plus one constant value ``a``, shown to the stopper in
uniform random order.  ``V`` takes the value ``n`` with mass ``1/n^2``, a
fixed value ``b`` with mass ``p/n`` and ``0`` with the remaining mass.

Feasibility of a parameter triple ``(a, b, p)`` means: the basic ordering
``0 < a < 1 < b`` with ``p > 0``, the logarithmic gap ``log(1+pb) < p``,
and five closed-form inequalities (named I..V below) under which the
asymptotic ordering of the acceptance times and the interval optimisation
of the hardness bound are valid.  An additional size-dependent check
(``pmf``) guarantees that the masses of ``V`` form a probability vector:
``p/n + 1/n^2 <= 1``.

All checks are evaluated unconditionally (no short-circuit) so a report
always shows every violated condition at once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

__all__ = [
    "CONDITION_NAMES",
    "ConditionCheck",
    "ConditionReport",
    "InstanceParams",
    "ValueDistribution",
    "ParameterError",
    "InfeasibleInstanceError",
    "validate",
    "make_instance",
]

CONDITION_NAMES = ("ordering", "log", "I", "II", "III", "IV", "V", "pmf")


class ParameterError(ValueError):
    """An input is non-finite, of the wrong type, or out of its domain."""


class InfeasibleInstanceError(ValueError):
    """Construction attempted with parameters that fail validation.

    The full :class:`ConditionReport` is attached as ``.report``.
    """

    def __init__(self, report: "ConditionReport"):
        failed = ", ".join(c.name for c in report.checks if not c.passed)
        super().__init__(f"infeasible parameters (failed checks: {failed})")
        self.report = report


@dataclass(frozen=True)
class ConditionCheck:
    """One feasibility inequality with its numeric witnesses."""

    name: str
    lhs: float
    rhs: float
    passed: bool

    def as_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "pass": self.passed}


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of all eight feasibility checks for one parameter tuple."""

    checks: tuple[ConditionCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> ConditionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.checks if not c.passed)

    def to_json(self) -> str:
        return json.dumps([c.as_dict() for c in self.checks])


@dataclass(frozen=True)
class ValueDistribution:
    """Three-point law of ``V``: support ``(n, b, 0)`` with the given masses.

    ``mean`` is stored as the closed form ``(1 + b*p)/n``.  For unchecked
    diagnostic instances (see :func:`make_instance`) the last mass may be
    negative; the masses then act as formal signed weights.
    """

    support: tuple[float, float, float]
    masses: tuple[float, float, float]
    mean: float


@dataclass(frozen=True)
class InstanceParams:
    """Parameter tuple of one instance: constant ``a``, value ``b``, mass scale ``p``, size ``n``.

    ``validated`` records whether construction went through the feasibility
    gate; diagnostic (unchecked) instances carry ``validated=False``.
    """

    a: float
    b: float
    p: float
    n: int
    validated: bool = True

    def distribution(self) -> ValueDistribution:
        n = self.n
        top = 1.0 / (n * n)
        mid = self.p / n
        return ValueDistribution(
            support=(float(n), self.b, 0.0),
            masses=(top, mid, 1.0 - mid - top),
            mean=(1.0 + self.b * self.p) / n,
        )


def _finite(x: float, name: str) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ParameterError(f"{name} must be finite, got {x!r}")
    return x


def _nan_on_domain_error(fn, *args) -> float:
    try:
        return fn(*args)
    except ValueError:
        return math.nan


def validate(a: float, b: float, p: float, n: int | None = None) -> ConditionReport:
    """Evaluate all eight feasibility checks for ``(a, b, p)`` and optionally ``n``.

    With ``n=None`` the size-dependent ``pmf`` row is reported in its
    large-size limit (lhs 0, trivially passing); pass an explicit ``n`` to
    check that the masses of ``V`` form a probability vector.

    The ``ordering`` row compresses ``0 < a < 1 < b`` and ``p > 0`` into a
    single numeric witness: lhs is the smallest of the four margins
    ``a, 1-a, b-1, p`` and the check passes iff it is positive.

    Pure function: identical inputs yield identical reports.
    """
    a = _finite(a, "a")
    b = _finite(b, "b")
    p = _finite(p, "p")
    if n is not None:
        if not isinstance(n, int) or isinstance(n, bool):
            raise ParameterError(f"n must be an integer, got {n!r}")
        if n < 1:
            raise ParameterError(f"n must be positive, got {n}")

    ordering_margin = min(a, 1.0 - a, b - 1.0, p)
    log_lhs = _nan_on_domain_error(math.log1p, p * b)

    u = 1.0 + b * p
    v = 1.0 + (b - a) * p
    ratio = u / v if v != 0.0 else math.nan
    lhs_i = _nan_on_domain_error(lambda r: r * math.log(r), ratio)
    lhs_ii = (2.0 - p) * (b - a)
    lhs_iii = (1.0 - lhs_ii) / v if v != 0.0 else math.nan
    if p != 0.0 and v > 0.0 and u > 0.0:
        rhs_iii = 1.0 + math.log(v / u) / p
    else:
        rhs_iii = math.nan
    lhs_iv = 2.0 + p * b * (1.0 - p * (b - a))
    denom_v = u * log_lhs
    lhs_v = b * p * v / denom_v if denom_v and not math.isnan(denom_v) else math.nan

    if n is None:
        pmf_lhs = 0.0
    else:
        pmf_lhs = p / n + 1.0 / (n * n)

    checks = (
        ConditionCheck("ordering", ordering_margin, 0.0, ordering_margin > 0.0),
        ConditionCheck("log", log_lhs, p, log_lhs < p),
        ConditionCheck("I", lhs_i, a * p, lhs_i <= a * p),
        ConditionCheck("II", lhs_ii, 1.0, lhs_ii < 1.0),
        ConditionCheck("III", lhs_iii, rhs_iii, lhs_iii < rhs_iii),
        ConditionCheck("IV", lhs_iv, 0.0, lhs_iv >= 0.0),
        ConditionCheck("V", lhs_v, 1.0, lhs_v < 1.0),
        ConditionCheck("pmf", pmf_lhs, 1.0, pmf_lhs <= 1.0),
    )
    return ConditionReport(checks=checks)


def make_instance(
    a: float, b: float, p: float, n: int, unchecked: bool = False
) -> tuple[InstanceParams, ValueDistribution]:
    """Construct an instance and its value distribution.

    Raises :class:`InfeasibleInstanceError` (carrying the report) when any
    feasibility check fails.  ``unchecked=True`` skips the gate for
    diagnostic use, e.g. running the recursions at sizes where the pmf
    constraint cannot hold; the resulting masses are then formal weights.
    """
    if not unchecked:
        report = validate(a, b, p, n)
        if not report.passed:
            raise InfeasibleInstanceError(report)
        if not b < n:
            # the support triple is ordered n > b > 0: the size value must
            # dominate, otherwise the law of the maximum degenerates
            raise ParameterError(f"need b < n for an ordered support, got b={b}, n={n}")
        inst = InstanceParams(a=float(a), b=float(b), p=float(p), n=n)
    else:
        if not isinstance(n, int) or n < 1:
            raise ParameterError(f"n must be a positive integer, got {n!r}")
        inst = InstanceParams(a=float(a), b=float(b), p=float(p), n=n, validated=False)
    return inst, inst.distribution()
