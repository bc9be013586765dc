import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qrac.codes import (
    CodeParams,
    EncodingScheme,
    Measurement,
    QracCode,
    all_inputs,
    build_classical_rac,
    build_improved_qrac,
    build_insphere_qrac,
)
from qrac.errors import InvalidInputError, NotParityObliviousError
from qrac.evaluate import (
    bloch_length_squared,
    exact_report,
    monte_carlo,
    outcome_distribution,
    p_q_to_c,
    probabilities,
    q_to_c_probabilities,
    qrac_as_rac_measure,
)
from qrac.parity import verify_parity_oblivious

CUBE = (1 + 1 / math.sqrt(3)) / 2


@pytest.fixture(scope="module")
def cube():
    return build_insphere_qrac(CodeParams(2, 1, 3))


def test_two_bit_code_is_flat():
    code = build_insphere_qrac(CodeParams(2, 1, 2))
    for a in all_inputs(2, 2):
        for i in range(2):
            dist = outcome_distribution(code, a, i)
            assert math.isclose(dist[a[i]], (1 + 1 / math.sqrt(2)) / 2, abs_tol=1e-12)
            assert math.isclose(dist.sum(), 1.0, abs_tol=1e-12)


def test_improved_15_is_flat():
    code = build_improved_qrac(CodeParams(2, 2, 15))
    A = all_inputs(2, 15)
    P = probabilities(code, A)
    good = np.take_along_axis(P, A[:, :, None], axis=2)[..., 0]
    target = (1 + 1 / (3 * math.sqrt(5))) / 2
    assert np.abs(good - target).max() < 1e-12


def test_zero_scale_uniform_distribution():
    code = build_improved_qrac(CodeParams(3, 1, 4)).with_scheme(EncodingScheme("scaled", 0.0))
    assert np.allclose(outcome_distribution(code, [0, 1, 2, 0], 1), np.full(3, 1 / 3))
    assert math.isclose(exact_report(code).worst_case_p, 1 / 3, abs_tol=1e-12)


def test_probabilities_match_traces(cube):
    A = all_inputs(2, 3)
    P = probabilities(cube, A)
    for b, a in enumerate(A):
        rho = cube.encode(a)
        for i, mm in enumerate(cube.measurements):
            for j in range(2):
                assert math.isclose(P[b, i, j], np.trace(rho @ mm.operators[j]).real, abs_tol=1e-13)


def test_classical_report():
    rep = exact_report(build_classical_rac(CodeParams(2, 2, 3, "classical")))
    assert math.isclose(rep.worst_case_p, 2 / 3, abs_tol=1e-12)
    assert rep.average_p >= 2 / 3 - 1e-12
    assert rep.mode == "exhaustive" and not rep.lower_confidence
    assert rep.trials == 8


def test_report_json(cube):
    rep = exact_report(cube)
    d = json.loads(rep.to_json())
    assert d["worst_case_p"] == rep.worst_case_p
    assert len(d["argmin_input"]) == 3


def test_sampled_mode_flag():
    rep = exact_report(build_improved_qrac(CodeParams(2, 2, 15)), exhaustive_limit=100, samples=64, seed=2)
    assert rep.mode == "sampled" and rep.lower_confidence
    assert rep.trials == 64 and rep.seed == 2


def test_monte_carlo_cube(cube):
    res = monte_carlo(cube, 10 ** 6, seed=11)
    se = math.sqrt(CUBE * (1 - CUBE) / 10 ** 6)
    assert abs(res.report.average_p - CUBE) < 5 * se
    assert res.report.worst_case_p > CUBE - 5 * se
    assert res.within_bounds
    assert np.abs(res.frequencies - res.exact).max() < 5 * math.sqrt(0.25 / 10 ** 6)


def test_monte_carlo_zero_scale():
    code = build_improved_qrac(CodeParams(2, 1, 3)).with_scheme(EncodingScheme("scaled", 0.0))
    res = monte_carlo(code, 10 ** 5, seed=1)
    assert np.abs(res.frequencies - 0.5).max() < 5 * math.sqrt(0.25 / 10 ** 5)


def test_monte_carlo_d3_wrong_outcomes():
    code = build_improved_qrac(CodeParams(3, 1, 4))
    trials = 10 ** 5
    res = monte_carlo(code, trials, seed=4)
    A = res.inputs
    wrong = res.frequencies.copy()
    np.put_along_axis(wrong, A[:, :, None], 0.0, axis=2)
    assert wrong.max() < 1 / 3 + 5 * math.sqrt((2 / 9) / trials)


def test_monte_carlo_reproducible(cube):
    a = monte_carlo(cube, 1000, seed=9)
    b = monte_carlo(cube, 1000, seed=9)
    c = monte_carlo(cube, 1000, seed=10)
    assert np.array_equal(a.frequencies, b.frequencies)
    assert not np.array_equal(a.frequencies, c.frequencies)


def test_monte_carlo_rejects_zero_trials(cube):
    with pytest.raises(InvalidInputError):
        monte_carlo(cube, 0)


@pytest.mark.parametrize("d,p,expected", [(2, 0.5774, 0.5120), (2, 0.5, 0.5), (3, 1 / 3, 1 / 3), (5, 0.2, 0.2)])
def test_p_q_to_c_values(d, p, expected):
    assert abs(p_q_to_c(d, p) - expected) < 5e-5


def test_p_q_to_c_rejects_bad_p():
    with pytest.raises(InvalidInputError):
        p_q_to_c(2, 0.3)


@given(st.integers(2, 7), st.floats(0, 1))
def test_p_q_to_c_monotone_in_range(d, t):
    p = 1 / d + t * (1 - 1 / d)
    v = p_q_to_c(d, p)
    assert 1 / d - 1e-12 <= v <= p + 1e-12


def test_perfect_one_bit_code():
    code = build_improved_qrac(CodeParams(2, 1, 1))
    F = qrac_as_rac_measure(code)
    assert np.allclose(F[0], np.diag([1, 0])) and np.allclose(F[1], np.diag([0, 1]))


def test_cube_measure_sums_to_identity(cube):
    F = qrac_as_rac_measure(cube)
    assert F.shape == (8, 2, 2)
    assert np.abs(F.sum(axis=0) - np.eye(2)).max() < 1e-12


def test_classical_direct_q_to_c():
    code = build_classical_rac(CodeParams(2, 2, 3, "classical"))
    direct = q_to_c_probabilities(code)
    # oracle: explicit Tr(rho_a sum_{b: b_i = a_i} F_b)
    F = qrac_as_rac_measure(code)
    A = all_inputs(2, 3)
    for ai, a in enumerate(A):
        rho = code.encode(a)
        for i in range(3):
            G = sum(F[bi] for bi, b in enumerate(A) if b[i] == a[i])
            assert math.isclose(direct[ai, i], np.trace(rho @ G).real, abs_tol=1e-12)
    assert np.allclose(direct, 5 / 9)
    assert math.isclose(p_q_to_c(2, 2 / 3), 5 / 9)


def test_unbalanced_encoding_is_not_a_measure():
    # rank-1 / rank-3 split: the per-slot terms no longer cancel over inputs
    p0 = np.diag([1, 0, 0, 0]).astype(complex)
    mm = Measurement(np.array([p0, np.eye(4) - p0]), None, None)
    code = QracCode(CodeParams(2, 2, 2), (mm, mm), EncodingScheme("scaled", 0.5), (0, 1), "custom", ())
    with pytest.raises(NotParityObliviousError):
        qrac_as_rac_measure(code)


def test_boosted_code_sums_to_identity_but_is_not_parity_oblivious():
    code = build_classical_rac(CodeParams(2, 2, 3, "classical"), boost_even_parity=True)
    F = qrac_as_rac_measure(code)
    assert np.abs(F.sum(axis=0) - np.eye(4)).max() < 1e-12
    assert not verify_parity_oblivious(code).ok


def test_bloch_length_cube(cube):
    assert np.allclose(bloch_length_squared(cube, all_inputs(2, 3)), 1.0)
