"""Fixed-step runs of differentiator tableaus against analytic test signals.

The recursion consumes exact samples of the signal and of its derivatives
below order k; only the k-th derivative history is fed back from computed
values, so any deviation from the exact k-th derivative evolves under the
feedback weights alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._files import atomic_write_text
from .tableau import (
    DifferentiatorRule,
    ObreshkovTableau,
    differentiator_form,
    _structural_violations,
)

__all__ = [
    "Constant",
    "Cosine",
    "Polynomial",
    "SimulationTrace",
    "Step",
    "oscillation_amplitude",
    "proper_init",
    "relative_error_metric",
    "run",
    "run_composite",
    "state_transition_matrix",
    "write_trace_csv",
]


def _check_order(order: int) -> None:
    if not isinstance(order, int) or order < 0:
        raise ValueError(f"derivative order must be a nonnegative integer, got {order!r}")


@dataclass(frozen=True)
class Cosine:
    """amplitude * cos(omega t); derivatives via the exact two-step recurrence."""

    omega: float
    amplitude: float = 1.0

    def deriv(self, order: int, t: float) -> float:
        _check_order(order)
        if order == 0:
            return self.amplitude * math.cos(self.omega * t)
        if order == 1:
            return -self.amplitude * self.omega * math.sin(self.omega * t)
        return -(self.omega * self.omega) * self.deriv(order - 2, t)


@dataclass(frozen=True)
class Polynomial:
    """sum_q coefficients[q] * t^q (ascending powers)."""

    coefficients: tuple[float, ...]

    def deriv(self, order: int, t: float) -> float:
        _check_order(order)
        c = self.coefficients
        if order >= len(c):
            return 0.0
        acc = 0.0
        for q in range(len(c) - 1, order - 1, -1):
            acc = acc * t + c[q] * math.perm(q, order)
        return acc


@dataclass(frozen=True)
class Constant:
    value: float

    def deriv(self, order: int, t: float) -> float:
        _check_order(order)
        return self.value if order == 0 else 0.0


@dataclass(frozen=True)
class Step:
    """0 before t_switch, level from t_switch on; derivative samples are all 0."""

    t_switch: float
    level: float

    def deriv(self, order: int, t: float) -> float:
        _check_order(order)
        if order == 0:
            return self.level if t >= self.t_switch else 0.0
        return 0.0


@dataclass(frozen=True)
class SimulationTrace:
    """Per-sample record of a run; error = computed - exact."""

    grid: np.ndarray
    computed: np.ndarray
    exact: np.ndarray
    error: np.ndarray
    flags: tuple[str, ...]
    meta: dict


def state_transition_matrix(t: ObreshkovTableau) -> np.ndarray:
    """m x m companion form that propagates the computed k-th derivative history."""
    violations = _structural_violations(t)
    if violations:
        raise ValueError("invalid tableau: " + "; ".join(violations))
    ck = t.c[t.k - 1]
    T = np.zeros((t.m, t.m))
    T[0, :] = [-(ck[j] / ck[0]) for j in range(1, t.m + 1)]
    if t.m > 1:
        T[1:, :-1] += np.eye(t.m - 1)
    return T


def proper_init(t: ObreshkovTableau, sig) -> tuple[float, ...]:
    """Exact k-th derivative at the m injection instants 0, -h, ..., -(m-1)h."""
    return tuple(sig.deriv(t.k, -j * t.h) for j in range(t.m))


def _forcing(rule: DifferentiatorRule, u, lower_vals, idx: int) -> float:
    terms = [rule.gain * u[idx]]
    for j in range(1, rule.base.m + 1):
        terms.append(rule.u_history[j - 1] * u[idx - j])
    for i in range(1, rule.base.k):
        for j in range(0, rule.base.m + 1):
            terms.append(rule.lower[i - 1][j] * lower_vals[i - 1][idx - j])
    return math.fsum(terms)


def run(
    t: ObreshkovTableau, sig, t_end: float, init, engine: str = "direct"
) -> SimulationTrace:
    """Run the recursion on the uniform grid n*h through t_end.

    init supplies the computed k-th derivative at 0, -h, ..., -(m-1)h
    (init[j] belongs to -j*h); those samples are flagged `init`. The
    state_space engine propagates the companion form instead of the scalar
    recursion; both see identical forcing terms.
    """
    if engine not in ("direct", "state_space"):
        raise ValueError(f"engine must be 'direct' or 'state_space', got {engine!r}")
    rule = differentiator_form(t)
    k, m, h = t.k, t.m, t.h
    init = tuple(float(v) for v in init)
    if len(init) != m:
        raise ValueError(f"init must supply m={m} values, got {len(init)}")
    if not all(math.isfinite(v) for v in init):
        raise ValueError("init values must be finite")
    if not (isinstance(t_end, (int, float)) and math.isfinite(t_end)):
        raise ValueError(f"t_end must be finite, got {t_end!r}")
    n_steps = int(math.floor(t_end / h + 1e-9))
    if n_steps < m:
        raise ValueError(f"t_end={t_end!r} must cover at least m={m} steps of h={h!r}")

    grid = np.array([n * h for n in range(-(m - 1), n_steps + 1)])
    u = np.array([sig.deriv(0, tt) for tt in grid])
    lower_vals = [np.array([sig.deriv(i, tt) for tt in grid]) for i in range(1, k)]
    exact = np.array([sig.deriv(k, tt) for tt in grid])

    computed = np.empty(len(grid))
    computed[:m] = init[::-1]
    flags = ["init"] * m
    status = "OK"
    if engine == "state_space":
        T = state_transition_matrix(t)
        x = np.array(init)

    end = len(grid)
    for idx in range(m, len(grid)):
        eiu = _forcing(rule, u, lower_vals, idx)
        if engine == "direct":
            val = math.fsum(
                rule.feedback[j - 1] * computed[idx - j] for j in range(1, m + 1)
            ) + eiu
        else:
            x = T @ x
            x[0] += eiu
            val = float(x[0])
        if not math.isfinite(val):
            status = "DIVERGED"
            end = idx
            break
        computed[idx] = val
        flags.append("main")

    grid, computed, exact = grid[:end], computed[:end], exact[:end]
    error = computed - exact
    meta = {
        "labels": (t.label or f"k{t.k}m{t.m}",),
        "h": h,
        "init": init,
        "engine": engine,
        "signal": repr(sig),
        "status": status,
    }
    return SimulationTrace(
        grid=grid, computed=computed, exact=exact, error=error, flags=tuple(flags), meta=meta
    )


def run_composite(stages, sig, t_end: float, init) -> SimulationTrace:
    """Chain single-step stages on abutting grids (startup stages ahead of the main one).

    stages is a sequence of (tableau, h, step_count); only the final stage may
    pass None to fill the remaining span through t_end. Each stage's first step
    feeds back the previous stage's last computed value, one stage step apart.
    """
    stages = list(stages)
    if not stages:
        raise ValueError("at least one stage is required")
    rules = []
    k = None
    for tab, hs, count in stages:
        if tab.m != 1:
            raise ValueError("composite stages must be single-step (m == 1)")
        if not (isinstance(hs, (int, float)) and math.isfinite(hs) and hs > 0):
            raise ValueError(f"stage step must be a positive finite number, got {hs!r}")
        if abs(hs - tab.h) > 1e-12 * tab.h:
            raise ValueError(f"stage step {hs!r} disagrees with its tableau h={tab.h!r}")
        rules.append(differentiator_form(tab))
        if k is None:
            k = tab.k
        elif tab.k != k:
            raise ValueError("all stages must target the same derivative order")
    if isinstance(init, (int, float)):
        init = (float(init),)
    init = tuple(float(v) for v in init)
    if len(init) != 1 or not math.isfinite(init[0]):
        raise ValueError("composite runs take a single finite init value at t = 0")
    if not (isinstance(t_end, (int, float)) and math.isfinite(t_end) and t_end > 0):
        raise ValueError(f"t_end must be a positive finite number, got {t_end!r}")

    grid = [0.0]
    computed = [init[0]]
    flags = ["init"]
    status = "OK"
    prev = init[0]
    anchor = 0.0
    labels = []
    for s_idx, ((tab, hs, count), rule) in enumerate(zip(stages, rules)):
        last = s_idx == len(stages) - 1
        labels.append(tab.label or f"k{tab.k}m{tab.m}")
        if count is None:
            if not last:
                raise ValueError("only the final stage may leave its step count open")
            count = int(math.floor((t_end - anchor) / hs + 1e-9))
        else:
            if not isinstance(count, int) or count < 1:
                raise ValueError(f"stage step count must be a positive integer, got {count!r}")
        if count < 1:
            raise ValueError("stages do not fit: no room left before t_end")
        hs = float(hs)
        for n in range(1, count + 1):
            tt = anchor + n * hs
            terms = [rule.gain * sig.deriv(0, tt), rule.u_history[0] * sig.deriv(0, tt - hs)]
            for i in range(1, tab.k):
                terms.append(rule.lower[i - 1][0] * sig.deriv(i, tt))
                terms.append(rule.lower[i - 1][1] * sig.deriv(i, tt - hs))
            val = rule.feedback[0] * prev + math.fsum(terms)
            if not math.isfinite(val):
                status = "DIVERGED"
                break
            grid.append(tt)
            computed.append(val)
            flags.append("main" if last else "startup")
            prev = val
        if status == "DIVERGED":
            break
        anchor = anchor + count * hs

    grid_arr = np.array(grid)
    computed_arr = np.array(computed)
    exact = np.array([sig.deriv(k, tt) for tt in grid])
    meta = {
        "labels": tuple(labels),
        "h": tuple(float(hs) for _, hs, _ in stages),
        "init": init,
        "engine": "direct",
        "signal": repr(sig),
        "status": status,
    }
    return SimulationTrace(
        grid=grid_arr,
        computed=computed_arr,
        exact=exact,
        error=computed_arr - exact,
        flags=tuple(flags),
        meta=meta,
    )


def relative_error_metric(trace: SimulationTrace, exclude_first: int = 2) -> float:
    """100 * ||computed - exact||_2 / ||exact||_2, skipping the injected samples
    and the first exclude_first computed steps after t = 0."""
    if not isinstance(exclude_first, int) or exclude_first < 0:
        raise ValueError(f"exclude_first must be a nonnegative integer, got {exclude_first!r}")
    n_init = 0
    for flag in trace.flags:
        if flag != "init":
            break
        n_init += 1
    start = n_init + exclude_first
    err = trace.error[start:]
    ex = trace.exact[start:]
    if len(err) == 0:
        raise ValueError("no samples left after the exclusions")
    denom = float(np.linalg.norm(ex))
    if denom == 0.0:
        raise ValueError("metric undefined: exact derivative norm vanishes on the window")
    return 100.0 * float(np.linalg.norm(err)) / denom


def oscillation_amplitude(trace: SimulationTrace, window) -> float:
    """Mean of |error[n] - error[n-1]| / 2 over consecutive samples inside window."""
    a, b = (float(window[0]), float(window[1]))
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise ValueError(f"window must be a finite increasing pair, got {window!r}")
    slop = 1e-9 * max(1.0, abs(a), abs(b))
    inside = (trace.grid >= a - slop) & (trace.grid <= b + slop)
    idx = np.nonzero(inside)[0]
    if len(idx) < 4:
        raise ValueError(f"window {window!r} holds {len(idx)} samples; at least 4 required")
    halves = [
        abs(trace.error[i] - trace.error[i - 1]) / 2.0
        for prev, i in zip(idx, idx[1:])
        if i == prev + 1
    ]
    return float(np.mean(halves))


def write_trace_csv(trace: SimulationTrace, path) -> None:
    lines = ["t,computed,exact,error,flag"]
    for tt, comp, ex, err, flag in zip(
        trace.grid, trace.computed, trace.exact, trace.error, trace.flags
    ):
        lines.append(f"{tt:.17g},{comp:.17g},{ex:.17g},{err:.17g},{flag}")
    atomic_write_text(path, "\n".join(lines) + "\n")
