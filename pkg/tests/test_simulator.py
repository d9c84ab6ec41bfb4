from __future__ import annotations

import math

import numpy as np
import pytest

from obreshkov import (
    CATALOG_NAMES,
    FREQUENCY_TUNED,
    OMEGA_SYN,
    Constant,
    Cosine,
    ObreshkovTableau,
    Polynomial,
    Step,
    make_catalog,
    origin_multiplicity,
    oscillation_amplitude,
    proper_init,
    relative_error,
    relative_error_metric,
    run,
    run_composite,
    state_transition_matrix,
)
from obreshkov.simulator import write_trace_csv

IDEAL_MEMBERS = ("BE", "BDF2", "B", "D", "E", "F")


def catalog(name: str, h: float = 1e-3):
    return make_catalog(name, h, omega_select=OMEGA_SYN if name in FREQUENCY_TUNED else None)


def test_alternating_error_on_constant_signal():
    h = 1e-3
    t = make_catalog("TR", h)
    trace = run(t, Constant(5.0), 12 * h, (1.0,))
    expected = np.array([(-1.0) ** n for n in range(13)])
    assert np.array_equal(trace.error, expected)
    assert np.array_equal(trace.computed, expected)
    assert oscillation_amplitude(trace, (0.0, 12 * h)) == 1.0


def test_zero_feedback_kills_injected_error():
    h = 1e-3
    trace = run(make_catalog("BE", h), Constant(5.0), 10 * h, (1.0,))
    assert trace.error[0] == 1.0
    assert np.array_equal(trace.error[1:], np.zeros(10))


def test_two_step_rule_exact_on_quadratic():
    h = 0.1
    t = make_catalog("BDF2", h)
    sig = Polynomial((0.0, 0.0, 1.0))
    trace = run(t, sig, 3.0, proper_init(t, sig))
    scale = max(1.0, float(np.max(np.abs(trace.exact))))
    assert float(np.max(np.abs(trace.error))) <= 1e-12 * scale


def test_engines_agree_on_randomized_tableaus():
    rng = np.random.default_rng(20240817)
    for case in range(100):
        k = int(rng.integers(1, 4))
        m = int(rng.integers(1, 4))
        h = float(10.0 ** rng.uniform(-4, 0))
        roots: list[complex] = []
        while len(roots) < m:
            if m - len(roots) >= 2 and rng.random() < 0.5:
                z = rng.uniform(0.0, 1.02) * np.exp(1j * rng.uniform(0.0, np.pi))
                roots += [z, np.conj(z)]
            else:
                roots.append(complex(rng.uniform(-1.02, 1.02)))
        poly = np.real(np.poly(roots))
        ck0 = float((1 if rng.random() < 0.5 else -1) * 10.0 ** rng.uniform(-1, 1) * h**k)
        rows = [
            tuple(float(rng.normal(0.0, 1.0)) * h**i for _ in range(m + 1))
            for i in range(1, k)
        ]
        rows.append(tuple(float(coeff * ck0) for coeff in poly))
        c0 = rng.normal(0.0, 1.0, m)
        c0[0] += 1.0 - math.fsum(c0)
        t = ObreshkovTableau(
            k=k, m=m, h=h, c0=tuple(float(v) for v in c0), c=tuple(rows)
        )
        sig = (
            Cosine(float(rng.uniform(1.0, 500.0)), float(rng.uniform(0.5, 2.0))),
            Polynomial(tuple(float(v) for v in rng.normal(0.0, 1.0, 5))),
            Constant(float(rng.normal(0.0, 3.0))),
        )[case % 3]
        init = tuple(float(v) for v in rng.normal(0.0, 10.0, m))
        a = run(t, sig, 60 * h, init, engine="direct")
        b = run(t, sig, 60 * h, init, engine="state_space")
        assert a.meta["status"] == "OK" and b.meta["status"] == "OK"
        scale = max(1.0, float(np.max(np.abs(a.computed))))
        assert float(np.max(np.abs(a.computed - b.computed))) <= 1e-12 * scale


def test_injected_error_superposition():
    rng = np.random.default_rng(31415)
    sig = Cosine(OMEGA_SYN, 1.0)
    for name in ("TR", "BDF2", "A", "C"):
        t = catalog(name)
        m = t.m
        init_a = tuple(float(v) for v in rng.normal(0.0, 100.0, m))
        init_b = tuple(float(v) for v in rng.normal(0.0, 100.0, m))
        tr_a = run(t, sig, 0.03, init_a)
        tr_b = run(t, sig, 0.03, init_b)
        delta = tuple(x - y for x, y in zip(init_a, init_b))
        hom = run(t, Constant(0.0), 0.03, delta)
        diff = tr_a.error - tr_b.error
        scale = max(1.0, float(np.max(np.abs(diff))))
        assert float(np.max(np.abs(hom.computed - diff))) <= 1e-10 * scale


def test_root_driven_decay():
    h = 0.01
    # single root at 0.5: feedback multiplies by exactly 0.5 each step
    t1 = ObreshkovTableau(k=1, m=1, h=h, c0=(1.0,), c=((h, -0.5 * h),))
    trace = run(t1, Constant(0.0), 40 * h, (1.0,))
    for n, value in enumerate(trace.computed):
        assert value == 0.5**n
    # roots 0.5 and 0.3: bound |e_n| <= 2.5 * 0.5^n from the explicit solution
    t2 = ObreshkovTableau(k=1, m=2, h=h, c0=(1.0, 0.0), c=((h, -0.8 * h, 0.15 * h),))
    trace2 = run(t2, Constant(0.0), 40 * h, (1.0, 1.0))
    for idx in range(1, len(trace2.grid)):
        n = idx - 1
        assert abs(trace2.computed[idx]) <= 2.5 * 0.5**n + 1e-14


def test_ideal_members_forget_init_bitwise():
    sig = Cosine(OMEGA_SYN, 1.0)
    for name in IDEAL_MEMBERS:
        t = catalog(name)
        m = t.m
        for engine in ("direct", "state_space"):
            a = run(t, sig, 0.012, tuple(0.0 for _ in range(m)), engine=engine)
            b = run(t, sig, 0.012, tuple(5e5 for _ in range(m)), engine=engine)
            assert not np.array_equal(a.computed[:m], b.computed[:m])
            assert np.array_equal(a.computed[m:], b.computed[m:]), (name, engine)


def test_polynomial_exactness_matches_multiplicity():
    rng = np.random.default_rng(55)
    h = 0.01
    for name in CATALOG_NAMES:
        t = make_catalog(name, h, 3.7 if name in FREQUENCY_TUNED else None)
        p = origin_multiplicity(t)
        sig = Polynomial(tuple(float(v) for v in rng.normal(0.0, 1.0, p)))
        trace = run(t, sig, 0.5, proper_init(t, sig))
        scale = max(1.0, float(np.max(np.abs(trace.exact))))
        assert float(np.max(np.abs(trace.error))) <= 1e-9 * scale, name


def test_frequency_exactness_with_proper_init():
    sig = Cosine(OMEGA_SYN, 1.0)
    for name in ("A", "B", "E"):
        t = make_catalog(name, 1e-3, OMEGA_SYN)
        trace = run(t, sig, 0.03, proper_init(t, sig))
        assert float(np.max(np.abs(trace.error))) <= 1e-9 * OMEGA_SYN**2, name


def test_metric_matches_transfer_prediction():
    t = make_catalog("D", 1e-3)
    trace = run(t, Cosine(OMEGA_SYN, 1.0), 1.0, (0.0,))
    metric = relative_error_metric(trace)
    # steady state: error phasor is R(jw) * u-phasor, exact is -w^2 * u-phasor
    predicted = 100.0 * abs(relative_error(t, 1j * OMEGA_SYN)) / (
        OMEGA_SYN**2 * abs(t.c[1][0])
    )
    assert abs(metric - predicted) / predicted <= 5e-3


def test_metric_independent_of_init_for_zero_feedback():
    t = make_catalog("D", 1e-3)
    sig = Cosine(OMEGA_SYN, 1.0)
    m_a = relative_error_metric(run(t, sig, 0.5, (0.0,)))
    m_b = relative_error_metric(run(t, sig, 0.5, (1e6,)))
    assert m_a == m_b


def test_oscillation_amplitudes_on_reproduction_runs():
    sig = Cosine(OMEGA_SYN, 1.0)
    tr_trace = run(make_catalog("TR", 1e-3), sig, 0.02, (300.0,))
    amp_tr = oscillation_amplitude(tr_trace, (0.01, 0.02))
    assert 270.0 <= amp_tr <= 330.0
    be_trace = run(make_catalog("BE", 1e-3), sig, 0.02, (300.0,))
    amp_be = oscillation_amplitude(be_trace, (0.01, 0.02))
    # truncation ripple only: ~(wh/2)*(h/2)*w^2*mean|cos|, about 8.7 here
    assert amp_be < 10.0
    assert amp_be < amp_tr / 30.0


def test_composite_startup_grid_and_flags():
    sig = Cosine(OMEGA_SYN, 1.0)
    be_half = make_catalog("BE", 5e-4)
    tr = make_catalog("TR", 1e-3)
    trace = run_composite([(be_half, 5e-4, 2), (tr, 1e-3, None)], sig, 0.02, 300.0)
    assert np.allclose(trace.grid[:5], [0.0, 5e-4, 1e-3, 2e-3, 3e-3], rtol=0.0, atol=1e-12)
    assert trace.flags[:4] == ("init", "startup", "startup", "main")
    assert trace.flags[-1] == "main"
    assert trace.meta["labels"] == ("BE", "TR")
    assert abs(trace.grid[-1] - 0.02) <= 1e-9
    assert oscillation_amplitude(trace, (0.01, 0.02)) > 1.0

    trace4 = run_composite([(be_half, 5e-4, 4), (tr, 1e-3, None)], sig, 0.02, 300.0)
    assert np.allclose(trace4.grid[:6], [0.0, 5e-4, 1e-3, 1.5e-3, 2e-3, 3e-3], rtol=0.0, atol=1e-12)
    assert trace4.flags[1:5] == ("startup",) * 4
    early = oscillation_amplitude(trace4, (0.005, 0.01))
    late = oscillation_amplitude(trace4, (0.015, 0.02))
    assert 0.9 <= early / late <= 1.1


def test_composite_single_stage_constant():
    h = 1e-3
    trace = run_composite([(make_catalog("BE", h), h, None)], Constant(5.0), 10 * h, 300.0)
    assert trace.error[0] == 300.0
    assert np.array_equal(trace.error[1:], np.zeros(10))


def test_composite_validation():
    h = 1e-3
    be = make_catalog("BE", h)
    tr = make_catalog("TR", h)
    sig = Constant(1.0)
    with pytest.raises(ValueError, match="single-step"):
        run_composite([(make_catalog("BDF2", h), h, None)], sig, 10 * h, 0.0)
    with pytest.raises(ValueError, match="derivative order"):
        run_composite([(be, h, 2), (catalog("D"), h, None)], sig, 10 * h, 0.0)
    with pytest.raises(ValueError, match="final stage"):
        run_composite([(be, h, None), (tr, h, 2)], sig, 10 * h, 0.0)
    with pytest.raises(ValueError, match="disagrees"):
        run_composite([(be, 2 * h, 2), (tr, h, None)], sig, 10 * h, 0.0)
    with pytest.raises(ValueError, match="single finite init"):
        run_composite([(be, h, None)], sig, 10 * h, (1.0, 2.0))
    with pytest.raises(ValueError, match="at least one stage"):
        run_composite([], sig, 10 * h, 0.0)
    with pytest.raises(ValueError, match="step count"):
        run_composite([(be, h, 0), (tr, h, None)], sig, 10 * h, 0.0)
    with pytest.raises(ValueError, match="do not fit"):
        run_composite([(be, h, None)], sig, h / 2.0, 0.0)


def test_divergence_truncates_trace():
    t = ObreshkovTableau(k=1, m=1, h=1e-3, c0=(1.0,), c=((1e-3, -2e-3),))
    with np.errstate(over="ignore"):
        trace = run(t, Constant(0.0), 2.0, (1e300,))
    assert trace.meta["status"] == "DIVERGED"
    assert len(trace.grid) < 2001
    assert np.all(np.isfinite(trace.computed))
    assert len(trace.flags) == len(trace.grid) == len(trace.computed) == len(trace.error)


def test_metric_validation():
    h = 1e-3
    t = make_catalog("TR", h)
    sig = Cosine(OMEGA_SYN, 1.0)
    with pytest.raises(ValueError, match="no samples left"):
        relative_error_metric(run(t, sig, 2 * h, (0.0,)))
    with pytest.raises(ValueError, match="vanishes"):
        relative_error_metric(run(t, Constant(5.0), 10 * h, (0.0,)))
    with pytest.raises(ValueError, match="exclude_first"):
        relative_error_metric(run(t, sig, 10 * h, (0.0,)), exclude_first=-1)


def test_oscillation_window_validation():
    t = make_catalog("TR", 1e-3)
    trace = run(t, Constant(5.0), 0.01, (1.0,))
    with pytest.raises(ValueError, match="increasing"):
        oscillation_amplitude(trace, (0.5, 0.2))
    with pytest.raises(ValueError, match="at least 4"):
        oscillation_amplitude(trace, (0.0, 2e-3))
    with pytest.raises(ValueError, match="increasing"):
        oscillation_amplitude(trace, (math.nan, 1.0))


def test_trace_csv_round_trip(tmp_path):
    t = make_catalog("TR", 1e-3)
    trace = run(t, Cosine(OMEGA_SYN, 1.0), 0.01, (300.0,))
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, path)
    text = path.read_text()
    lines = text.strip().split("\n")
    assert lines[0] == "t,computed,exact,error,flag"
    assert len(lines) == len(trace.grid) + 1
    for idx in (1, 5, len(lines) - 1):
        tt, comp, ex, err, flag = lines[idx].split(",")
        assert float(tt) == trace.grid[idx - 1]
        assert float(comp) == trace.computed[idx - 1]
        assert float(ex) == trace.exact[idx - 1]
        assert float(err) == trace.error[idx - 1]
        assert flag == trace.flags[idx - 1]
    write_trace_csv(trace, tmp_path / "again.csv")
    assert (tmp_path / "again.csv").read_bytes() == path.read_bytes()


def test_proper_init_values():
    h = 1e-3
    sig = Cosine(OMEGA_SYN, 2.0)
    tr = make_catalog("TR", h)
    assert proper_init(tr, sig) == (sig.deriv(1, 0.0),)
    bdf2 = make_catalog("BDF2", h)
    assert proper_init(bdf2, sig) == (sig.deriv(1, 0.0), sig.deriv(1, -h))
    d = make_catalog("D", h)
    assert proper_init(d, sig) == (sig.deriv(2, 0.0),)


def test_run_validation():
    t = make_catalog("BDF2", 1e-3)
    sig = Constant(1.0)
    with pytest.raises(ValueError, match="init must supply"):
        run(t, sig, 0.01, (1.0,))
    with pytest.raises(ValueError, match="finite"):
        run(t, sig, 0.01, (1.0, math.inf))
    with pytest.raises(ValueError, match="cover at least"):
        run(t, sig, 1e-3, (0.0, 0.0))
    with pytest.raises(ValueError, match="engine"):
        run(t, sig, 0.01, (0.0, 0.0), engine="implicit")
    with pytest.raises(ValueError, match="t_end"):
        run(t, sig, math.nan, (0.0, 0.0))


def test_state_transition_matrix_entries():
    assert np.array_equal(
        state_transition_matrix(make_catalog("BDF2", 1e-3)),
        np.array([[0.0, 0.0], [1.0, 0.0]]),
    )
    assert np.array_equal(
        state_transition_matrix(make_catalog("TR", 1e-3)), np.array([[-1.0]])
    )
    with pytest.raises(ValueError):
        state_transition_matrix(
            ObreshkovTableau(k=1, m=1, h=1e-3, c0=(1.0,), c=((0.0, 1.0),))
        )


def test_signal_derivatives():
    sig = Cosine(3.0, 2.0)
    for order in range(4):
        for t in (0.0, 0.4, -1.3):
            assert sig.deriv(order + 2, t) == -(9.0) * sig.deriv(order, t)
    assert sig.deriv(1, 0.5) == -2.0 * 3.0 * math.sin(1.5)

    p = Polynomial((3.0, -2.0, 5.0, 1.0))
    assert p.deriv(0, 2.0) == 27.0
    assert p.deriv(1, 2.0) == 30.0
    assert p.deriv(2, 2.0) == 22.0
    assert p.deriv(3, 10.0) == 6.0
    assert p.deriv(4, 10.0) == 0.0

    step = Step(0.5, 7.0)
    assert step.deriv(0, 0.49) == 0.0
    assert step.deriv(0, 0.5) == 7.0
    assert step.deriv(0, 0.51) == 7.0
    assert step.deriv(1, 0.51) == 0.0

    const = Constant(4.0)
    assert const.deriv(0, 1.0) == 4.0
    assert const.deriv(2, 1.0) == 0.0

    for bad in (-1, 1.5):
        with pytest.raises(ValueError):
            const.deriv(bad, 0.0)
