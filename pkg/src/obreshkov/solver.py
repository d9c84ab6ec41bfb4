"""Linear synthesis of tableau coefficients from accuracy and frequency conditions.

Every condition is affine in the coefficients:

  * a_n = 0 pushes the zero of R at the origin to multiplicity n+1,
  * Re R(j w) = 0 and Im R(j w) = 0 place an exact transfer zero at w.

The solver assembles one row per condition over the non-fixed coefficient
slots and solves the resulting dense system. Columns are scaled by h^i per
order-i slot and rows by their largest entry so the factorization sees an
O(1) matrix regardless of step size. Conditions that the fixed slots already
satisfy identically (zero coefficient row) are dropped after checking that
their constant term vanishes too; a zero row with a surviving constant means
the request contradicts the fixed slots and is rejected outright.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectrum import frequency_zero_residual, origin_multiplicity
from .tableau import ObreshkovTableau, admissibility_violation

__all__ = [
    "CertificationReport",
    "ConstraintSet",
    "InconsistentSystemError",
    "SingularSystemError",
    "SynthesisError",
    "solve_coefficients",
    "verify_synthesis",
]

_DROP_TOL = 1e-12
_RESIDUAL_TOL = 1e-9
_FREQ_CERT_TOL = 1e-10
_FIXED_CERT_TOL = 1e-14


class SynthesisError(ValueError):
    """A constraint set that cannot be turned into a tableau."""


class SingularSystemError(SynthesisError):
    """Underdetermined or rank-deficient condition system."""


class InconsistentSystemError(SynthesisError):
    """Conditions that contradict each other or the fixed slots."""


@dataclass(frozen=True)
class ConstraintSet:
    """Synthesis request: structure, pinned slots, origin multiplicity, zero frequencies.

    fixed maps (order, steps_back) slots to pinned values; order 0 slots use
    steps_back >= 1 (the current value is the left-hand side, never a slot).
    """

    k: int
    m: int
    h: float
    fixed: tuple = field(default=())
    origin_multiplicity: int = 1
    frequencies: tuple = field(default=())

    def __post_init__(self):
        if isinstance(self.h, (int, float)) and not isinstance(self.h, bool):
            object.__setattr__(self, "h", float(self.h))
        fixed = self.fixed
        if hasattr(fixed, "items"):
            fixed = fixed.items()
        normalized = tuple(
            sorted(((int(i), int(j)), float(v)) for (i, j), v in fixed)
        )
        object.__setattr__(self, "fixed", normalized)
        object.__setattr__(
            self, "frequencies", tuple(sorted({float(w) for w in self.frequencies}))
        )

    @property
    def fixed_map(self) -> dict:
        return dict(self.fixed)


def _slots(k: int, m: int) -> list[tuple[int, int]]:
    slots = [(0, j) for j in range(1, m + 1)]
    for i in range(1, k + 1):
        slots.extend((i, j) for j in range(0, m + 1))
    return slots


def _check_request(cs: ConstraintSet) -> list[tuple[int, int]]:
    if not (isinstance(cs.k, int) and cs.k >= 1 and isinstance(cs.m, int) and cs.m >= 1):
        raise SynthesisError(f"k and m must be positive integers, got {cs.k!r}, {cs.m!r}")
    if not (isinstance(cs.h, float) and math.isfinite(cs.h) and cs.h > 0):
        raise SynthesisError(f"h must be a positive finite number, got {cs.h!r}")
    if not (isinstance(cs.origin_multiplicity, int) and cs.origin_multiplicity >= 1):
        raise SynthesisError(
            f"origin_multiplicity must be a positive integer, got {cs.origin_multiplicity!r}"
        )
    slots = _slots(cs.k, cs.m)
    seen = set()
    for (i, j), v in cs.fixed:
        if (i, j) not in slots:
            raise SynthesisError(f"fixed slot {(i, j)} is outside the (k={cs.k}, m={cs.m}) layout")
        if (i, j) in seen:
            raise SynthesisError(f"fixed slot {(i, j)} pinned twice")
        seen.add((i, j))
        if not math.isfinite(v):
            raise SynthesisError(f"fixed slot {(i, j)} has non-finite value {v!r}")
    for w in cs.frequencies:
        bad = admissibility_violation(w, cs.h)
        if bad:
            raise SynthesisError(f"frequency {w!r}: {bad}")
    return slots


def _condition_rows(cs: ConstraintSet, slots) -> list[tuple[str, np.ndarray, float]]:
    """(name, weight row over slots, constant) with the condition read as row . c = constant."""
    rows = []
    h = cs.h
    for n in range(cs.origin_multiplicity):
        w = np.zeros(len(slots))
        for col, (i, j) in enumerate(slots):
            if i == 0:
                w[col] = (-j * h) ** n / math.factorial(n)
            elif n >= i:
                w[col] = (-j * h) ** (n - i) / math.factorial(n - i)
        rows.append((f"a{n}", w, 1.0 if n == 0 else 0.0))
    for omega in cs.frequencies:
        v = np.zeros(len(slots), dtype=complex)
        for col, (i, j) in enumerate(slots):
            v[col] = (1j * omega) ** i * np.exp(-1j * omega * j * h)
        rows.append((f"Re R(j*{omega:g})", v.real.copy(), 1.0))
        rows.append((f"Im R(j*{omega:g})", v.imag.copy(), 0.0))
    return rows


def solve_coefficients(cs: ConstraintSet, least_squares: bool = False) -> ObreshkovTableau:
    """Solve the condition system for the non-fixed slots and assemble a tableau."""
    slots = _check_request(cs)
    fixed = cs.fixed_map
    free = [s for s in slots if s not in fixed]
    free_cols = [slots.index(s) for s in free]
    col_scale = np.array([cs.h**i for i, _ in free])

    kept_names: list[str] = []
    a_rows: list[np.ndarray] = []
    b_vals: list[float] = []
    for name, w, rhs in _condition_rows(cs, slots):
        scaled_all = [abs(w[col]) * cs.h ** s[0] for col, s in enumerate(slots)]
        ref = max(scaled_all + [abs(rhs)])
        b = rhs - math.fsum(w[col] * fixed[s] for col, s in enumerate(slots) if s in fixed)
        row = w[free_cols] * col_scale
        peak = float(np.max(np.abs(row))) if len(free) else 0.0
        if peak <= _DROP_TOL * ref:
            if abs(b) > _DROP_TOL * max(1.0, ref):
                raise InconsistentSystemError(
                    f"condition {name} is fixed-slot determined but violated "
                    f"(constant residual {b:.3e})"
                )
            continue  # identically satisfied by the fixed slots
        row_scale = max(peak, abs(b))
        kept_names.append(name)
        a_rows.append(row / row_scale)
        b_vals.append(b / row_scale)

    n_free = len(free)
    n_eq = len(a_rows)
    if n_free == 0:
        solution: dict = {}
    else:
        if n_eq == 0:
            raise SingularSystemError(f"no conditions left for {n_free} free slots")
        if n_eq < n_free and not least_squares:
            raise SingularSystemError(
                f"underdetermined system: {n_eq} independent conditions for {n_free} free slots"
            )
        A = np.vstack(a_rows)
        b = np.array(b_vals)
        # rank-deficient or non-square requests fall back to the minimum-norm
        # least-squares solution, but only behind the explicit flag
        x, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
        residual = float(np.max(np.abs(A @ x - b)))
        tol = _RESIDUAL_TOL * max(1.0, float(np.max(np.abs(b))))
        if not least_squares:
            if rank < n_free:
                raise SingularSystemError(
                    f"condition system is rank deficient (rank {rank}, {n_free} free slots)"
                )
            if residual > tol:
                if n_eq > n_free:
                    raise InconsistentSystemError(
                        f"overdetermined system has least-squares residual {residual:.3e} "
                        f"({n_eq} conditions, {n_free} free slots; offending set: {kept_names})"
                    )
                raise SynthesisError(f"solver residual unexpectedly large: {residual:.3e}")
        solution = {s: float(x[col] * col_scale[col]) for col, s in enumerate(free)}

    def value(i: int, j: int) -> float:
        s = (i, j)
        return fixed[s] if s in fixed else solution[s]

    c0 = tuple(value(0, j) for j in range(1, cs.m + 1))
    c = tuple(tuple(value(i, j) for j in range(0, cs.m + 1)) for i in range(1, cs.k + 1))
    # h^k is the natural magnitude of that slot; anything this far below it
    # is solver round-off standing in for an exact zero
    if abs(c[cs.k - 1][0]) <= 1e-12 * cs.h**cs.k:
        raise SynthesisError(
            "synthesized tableau has (numerically) zero current k-th derivative weight; "
            "the request admits no differentiator"
        )
    return ObreshkovTableau(
        k=cs.k, m=cs.m, h=cs.h, c0=c0, c=c,
        omega_select=cs.frequencies[0] if len(cs.frequencies) == 1 else None,
    )


@dataclass(frozen=True)
class CertificationReport:
    """Independent re-check of a tableau against the constraint set that built it."""

    required_multiplicity: int
    achieved_multiplicity: int
    frequency_residuals: tuple[tuple[float, float], ...]
    fixed_slot_errors: tuple[tuple[tuple[int, int], float], ...]
    failures: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.failures


def verify_synthesis(t: ObreshkovTableau, cs: ConstraintSet) -> CertificationReport:
    """Certify multiplicity, frequency zeros, and pinned slots via the spectrum module."""
    _check_request(cs)
    failures: list[str] = []
    if (t.k, t.m) != (cs.k, cs.m):
        failures.append(f"structure mismatch: tableau is (k={t.k}, m={t.m}), request (k={cs.k}, m={cs.m})")
    if t.h != cs.h:
        failures.append(f"step mismatch: tableau h={t.h!r}, request h={cs.h!r}")
    achieved = origin_multiplicity(t) if not failures else -1
    if not failures and achieved < cs.origin_multiplicity:
        failures.append(
            f"origin multiplicity {achieved} below required {cs.origin_multiplicity}"
        )
    freq_res = []
    if not any(f.startswith("structure") or f.startswith("step") for f in failures):
        for w in cs.frequencies:
            r = frequency_zero_residual(t, w)
            freq_res.append((w, r))
            if r > _FREQ_CERT_TOL:
                failures.append(f"|R(j*{w:g})| = {r:.3e} exceeds {_FREQ_CERT_TOL:g}")
    fixed_err = []
    for (i, j), v in cs.fixed:
        try:
            err = abs(t.coeff(i, j) - v)
        except IndexError:
            continue
        fixed_err.append(((i, j), err))
        if err > _FIXED_CERT_TOL * max(1.0, abs(v)):
            failures.append(f"fixed slot {(i, j)} drifted by {err:.3e}")
    return CertificationReport(
        required_multiplicity=cs.origin_multiplicity,
        achieved_multiplicity=achieved,
        frequency_residuals=tuple(freq_res),
        fixed_slot_errors=tuple(fixed_err),
        failures=tuple(failures),
    )
