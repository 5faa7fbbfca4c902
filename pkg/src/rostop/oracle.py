"""Independent ground truth: exhaustive history recursion and Monte Carlo.

The exhaustive oracle runs the backward induction over *value histories*
(tuples of observed values, at most one equal to the constant) instead of
the collapsed two-sequence form, at tiny sizes.  Conditional arrival law
after ``k`` observations: the next value is the constant with probability
``1/(n+1-k)`` if it is still pending (0 otherwise), else a fresh draw of
``V``.  Because every history of the same depth and pending-constant flag
feeds through identical arithmetic, the oracle's continuation values should
collapse exactly onto ``(depth, flag)`` classes; this is asserted on every
run and is the independent confirmation that the collapsed tables compute
the same program.

Monte Carlo simulators are reproducible by construction: trials are cut
into fixed batches of ``TRIALS_PER_BATCH`` and batch ``i`` of run ``seed``
draws from a counter-based Philox stream with key ``(seed, i)``, so results
do not depend on scheduling; per-batch partial sums are reduced in a fixed
order.  The policy simulator walks each trial forward and accepts the first
value at least as large as the applicable future reward (``>=``, matching
the collapsed tables).  Zero values are never accepted before the forced
final step (future rewards are positive), so the walk advances by jumping
between non-zero draws with geometric strides; the visited decisions are
exactly those of the step-by-step walk.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO

import numpy as np

from .asymptotics import ConsistencyError
from .dp import ThresholdTables, _first_crossing
from .instance import InstanceParams

__all__ = [
    "MAX_ORACLE_SIZE",
    "TRIALS_PER_BATCH",
    "OracleSizeError",
    "HistoryValue",
    "SimulationReport",
    "history_values",
    "exhaustive_optimal_value",
    "simulate_policy",
    "simulate_prophet",
    "write_histogram_csv",
]

MAX_ORACLE_SIZE = 8  # the history space is O(4^n); refuse anything larger
TRIALS_PER_BATCH = 4096
_NEVER = np.iinfo(np.int64).max  # sentinel slot meaning "does not happen"


class OracleSizeError(ValueError):
    """Exhaustive enumeration refused: instance too large."""


@dataclass(frozen=True)
class HistoryValue:
    """Continuation value after observing ``history`` (depth = len(history))."""

    history: tuple[float, ...]
    gamma: float
    depth: int


@dataclass(frozen=True)
class SimulationReport:
    """Seeded Monte Carlo summary; ``stop_histogram`` maps step to trial count."""

    trials: int
    mean: float
    std_error: float
    stop_histogram: dict[int, int]
    seed: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "trials": self.trials,
                "mean": self.mean,
                "std_error": self.std_error,
                "seed": self.seed,
                "stop_histogram": {str(k): v for k, v in sorted(self.stop_histogram.items())},
            }
        )


def write_histogram_csv(report: SimulationReport, out: IO[str]) -> None:
    out.write("step,count\n")
    for step, count in sorted(report.stop_histogram.items()):
        out.write(f"{step},{count}\n")


def _continuation_table(inst: InstanceParams) -> dict[tuple[float, ...], float]:
    """Map every history to its continuation value, by memoised recursion."""
    n = inst.n
    if n > MAX_ORACLE_SIZE:
        raise OracleSizeError(f"n={n} exceeds the exhaustive limit {MAX_ORACLE_SIZE}")
    a, b = inst.a, inst.b
    nv = float(n)
    w_top, w_mid, w_zero = inst.distribution().masses
    horizon = n + 1
    table: dict[tuple[float, ...], float] = {}

    def gamma(hist: tuple[float, ...], x: float) -> float:
        # Optimal value on arrival of x after hist: accept x or continue.
        h2 = hist + (x,)
        if len(h2) == horizon:
            return x
        return max(x, continuation(h2))

    def continuation(hist: tuple[float, ...]) -> float:
        cached = table.get(hist)
        if cached is not None:
            return cached
        k = len(hist)
        ev = (w_top * gamma(hist, nv) + w_mid * gamma(hist, b)) + w_zero * gamma(hist, 0.0)
        if a in hist:
            val = ev
        else:
            rem = n + 1 - k  # remaining slots, exactly one of which holds the constant
            val = gamma(hist, a) / rem + (1.0 - 1.0 / rem) * ev
        table[hist] = val
        return val

    continuation(())
    return table


def _assert_collapse(table: dict[tuple[float, ...], float], a: float) -> None:
    # Continuation values must agree bit-for-bit within each (depth, flag) class.
    classes: dict[tuple[int, bool], float] = {}
    for hist, val in table.items():
        key = (len(hist), a in hist)
        ref = classes.setdefault(key, val)
        if val != ref:
            raise ConsistencyError(
                f"history collapse violated at depth {key[0]} (constant seen={key[1]}): "
                f"{val!r} != {ref!r}"
            )


def history_values(inst: InstanceParams) -> tuple[HistoryValue, ...]:
    """All continuation values, ordered by (depth, history)."""
    table = _continuation_table(inst)
    items = sorted(table.items(), key=lambda kv: (len(kv[0]), kv[0]))
    return tuple(HistoryValue(history=h, gamma=v, depth=len(h)) for h, v in items)


def exhaustive_optimal_value(inst: InstanceParams) -> float:
    """Optimal expected reward by full history enumeration (n <= 8).

    The empty-history continuation value is exactly the expectation of the
    optimal rule over the first arrival.  Also asserts the (depth, flag)
    collapse of the history table.
    """
    table = _continuation_table(inst)
    _assert_collapse(table, inst.a)
    return table[()]


def _batch_rng(seed: int, batch_index: int) -> np.random.Generator:
    # Stream-splitting rule: batch i of run `seed` uses Philox key (seed, i).
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, batch_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _acceptance_index(table: np.ndarray, value: float, n: int) -> int:
    return _first_crossing(table, value, n)


def _reduce_reports(
    trials: int, seed: int, sums: list[float], sumsqs: list[float], hist: np.ndarray
) -> SimulationReport:
    total = float(np.sum(np.asarray(sums)))
    total_sq = float(np.sum(np.asarray(sumsqs)))
    mean = total / trials
    if trials > 1:
        var = max(total_sq - trials * mean * mean, 0.0) / (trials - 1)
        std_error = math.sqrt(var / trials)
    else:
        std_error = 0.0
    histogram = {int(step): int(cnt) for step, cnt in enumerate(hist) if cnt > 0}
    return SimulationReport(
        trials=trials, mean=mean, std_error=std_error, stop_histogram=histogram, seed=seed
    )


def _require_simulatable(inst: InstanceParams, trials: int) -> None:
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not inst.validated:
        raise ValueError("simulation needs a validated instance (real probabilities)")


def simulate_policy(
    inst: InstanceParams, tables: ThresholdTables, trials: int, seed: int
) -> SimulationReport:
    """Simulate the threshold rule defined by ``tables``.

    Per trial: the constant's slot is uniform on the ``n+1`` positions, the
    other slots hold iid draws of ``V`` in order, and the walk accepts the
    first value at least as large as the applicable future reward
    (``phibar`` strictly before the constant's slot, ``phi`` after it, the
    constant itself against ``phi`` at its own slot); whatever arrives at
    step ``n+1`` is accepted.  Tables must be positive (``+inf`` entries are
    allowed and model "never accept before the end").
    """
    _require_simulatable(inst, trials)
    n = inst.n
    if not (np.all(tables.phi[1:] > 0.0) and np.all(tables.phibar[1:] > 0.0)):
        raise ValueError("future-reward tables must be positive")
    a, b = inst.a, inst.b
    nv = float(n)
    w_top, w_mid, w_zero = inst.distribution().masses
    q_nz = w_top + w_mid  # per-draw probability of a non-zero value
    top_frac = w_top / q_nz

    # First step from which each support value is accepted, before/after the
    # constant's slot; the walk only needs these because the tables are
    # monotone, so "value >= table[k]" is exactly "k >= first crossing".
    acc_top_after = _acceptance_index(tables.phi, nv, n)
    acc_top_before = _acceptance_index(tables.phibar, nv, n)
    acc_b_after = _acceptance_index(tables.phi, b, n)
    acc_b_before = _acceptance_index(tables.phibar, b, n)
    acc_a = _acceptance_index(tables.phi, a, n)

    seed = int(seed)
    sums: list[float] = []
    sumsqs: list[float] = []
    hist = np.zeros(n + 2, dtype=np.int64)

    n_batches = (trials + TRIALS_PER_BATCH - 1) // TRIALS_PER_BATCH
    for batch in range(n_batches):
        m = min(TRIALS_PER_BATCH, trials - batch * TRIALS_PER_BATCH)
        rng = _batch_rng(seed, batch)
        pos_a = rng.integers(1, n + 2, size=m, dtype=np.int64)
        a_slot = np.where(pos_a >= acc_a, pos_a, _NEVER)

        reward = np.zeros(m)
        stop = np.zeros(m, dtype=np.int64)
        jcur = np.zeros(m, dtype=np.int64)  # V-draws consumed so far
        alive = np.arange(m, dtype=np.int64)

        while alive.size:
            strides = rng.geometric(q_nz, size=alive.size).astype(np.int64)
            jnext = jcur[alive] + strides
            has_event = jnext <= n
            pos_alive = pos_a[alive]
            slot_ev = np.where(has_event, jnext + (jnext >= pos_alive), _NEVER)
            a_first = a_slot[alive] < slot_ev

            done_a = alive[a_first]
            reward[done_a] = a
            stop[done_a] = a_slot[alive][a_first]

            ev_mask = has_event & ~a_first
            ev_idx = alive[ev_mask]
            u = rng.random(size=ev_idx.size)
            is_top = u < top_frac
            slots = slot_ev[ev_mask]
            before = slots < pos_a[ev_idx]
            threshold_idx = np.where(
                is_top,
                np.where(before, acc_top_before, acc_top_after),
                np.where(before, acc_b_before, acc_b_after),
            )
            accepted = (slots >= threshold_idx) | (slots == n + 1)
            done_v = ev_idx[accepted]
            reward[done_v] = np.where(is_top[accepted], nv, b)
            stop[done_v] = slots[accepted]

            # No non-zero draw left and no pending constant stop: the walk
            # reaches the final slot and collects the zero there.
            done_zero = alive[~has_event & ~a_first]
            reward[done_zero] = 0.0
            stop[done_zero] = n + 1

            cont = ev_idx[~accepted]
            jcur[cont] = jnext[ev_mask][~accepted]
            alive = cont

        sums.append(float(reward.sum()))
        sumsqs.append(float(np.square(reward).sum()))
        hist += np.bincount(stop, minlength=n + 2)

    return _reduce_reports(trials, seed, sums, sumsqs, hist)


def simulate_prophet(inst: InstanceParams, trials: int, seed: int) -> SimulationReport:
    """Mean of the maximum over freshly sampled instance realisations.

    Values are drawn through the uniform representation ``u -> value`` (a
    nonincreasing step map), so the row maximum equals the map applied to
    the row minimum; the recorded step is the arrival slot of the first
    occurrence of the maximum.
    """
    _require_simulatable(inst, trials)
    n = inst.n
    a, b = inst.a, inst.b
    nv = float(n)
    w_top, w_mid, _ = inst.distribution().masses
    c_top = w_top
    c_mid = w_top + w_mid

    seed = int(seed)
    sums: list[float] = []
    sumsqs: list[float] = []
    hist = np.zeros(n + 2, dtype=np.int64)
    rows_per_chunk = max(1, (1 << 22) // n)

    n_batches = (trials + TRIALS_PER_BATCH - 1) // TRIALS_PER_BATCH
    for batch in range(n_batches):
        m = min(TRIALS_PER_BATCH, trials - batch * TRIALS_PER_BATCH)
        rng = _batch_rng(seed, batch)
        pos_a = rng.integers(1, n + 2, size=m, dtype=np.int64)

        reward = np.empty(m)
        stop = np.empty(m, dtype=np.int64)
        start = 0
        while start < m:
            r = min(rows_per_chunk, m - start)
            u = rng.random((r, n))
            row_min = u.min(axis=1)
            pos_chunk = pos_a[start : start + r]

            sel_top = row_min < c_top
            sel_mid = (~sel_top) & (row_min < c_mid)
            sel_const = ~(sel_top | sel_mid)

            vals = np.where(sel_top, nv, np.where(sel_mid, b, a))
            first = np.zeros(r, dtype=np.int64)
            if sel_top.any():
                first[sel_top] = np.argmax(u[sel_top] < c_top, axis=1)
            if sel_mid.any():
                first[sel_mid] = np.argmax(u[sel_mid] < c_mid, axis=1)
            jpos = first + 1
            slots = jpos + (jpos >= pos_chunk)
            slots[sel_const] = pos_chunk[sel_const]

            reward[start : start + r] = vals
            stop[start : start + r] = slots
            start += r

        sums.append(float(reward.sum()))
        sumsqs.append(float(np.square(reward).sum()))
        hist += np.bincount(stop, minlength=n + 2)

    return _reduce_reports(trials, seed, sums, sumsqs, hist)
