import itertools
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qrac.codes import (
    CodeParams,
    EncodingScheme,
    all_inputs,
    build_classical_rac,
    build_improved_qrac,
    build_insphere_qrac,
    relabel_outcomes,
)
from qrac.errors import BoundViolationError, InvalidInputError
from qrac.evaluate import exact_report
from qrac.lambda_opt import anticommuting_set, random_rotation, rotate_generator_subset, subset_code
from qrac.parity import (
    basis_of_generator,
    class_averages_direct,
    d_parity,
    joint_prob,
    joint_prob_recursive,
    joint_prob_table,
    po_bound,
    simultaneous_slots,
    state_spectrum,
    verify_parity_oblivious,
)


def test_d_parity_examples():
    assert d_parity([1, 1, 0], [1, 2], 2) == 0
    assert d_parity([2, 2, 1], [1, 2, 3], 3) == 2


@given(st.lists(st.integers(0, 3), min_size=1, max_size=8), st.data())
def test_d_parity_matches_modular_sum(a, data):
    I = data.draw(st.sets(st.integers(1, len(a)), min_size=1))
    assert d_parity(a, I, 4) == sum(a[i - 1] for i in I) % 4


def test_d_parity_validation():
    with pytest.raises(InvalidInputError):
        d_parity([0, 1], [], 2)
    with pytest.raises(InvalidInputError):
        d_parity([0, 1], [3], 2)


def _direct_po_deviation(code):
    # oracle: every index set, explicit class averages
    A = all_inputs(code.d, code.n)
    states = code.encode_batch(A)
    worst = 0.0
    for size in range(2, code.n + 1):
        for I in itertools.combinations(range(code.n), size):
            par = A[:, I].sum(axis=1) % code.d
            for J in range(code.d):
                avg = states[par == J].mean(axis=0)
                worst = max(worst, np.abs(avg - np.eye(code.N) / code.N).max())
    return worst


@pytest.mark.parametrize(
    "params",
    [CodeParams(2, 1, 3), CodeParams(3, 1, 4), CodeParams(2, 2, 6), CodeParams(4, 1, 3)],
)
def test_fft_check_agrees_with_direct(params):
    code = build_improved_qrac(params)
    rep = verify_parity_oblivious(code)
    assert rep.ok and rep.mode == "exhaustive"
    assert _direct_po_deviation(code) < 1e-12


def test_class_averages_match_spectrum():
    code = relabel_outcomes(build_improved_qrac(CodeParams(3, 1, 4)), 1, [1, 2, 0])
    A = all_inputs(3, 4)
    states = code.encode_batch(A)
    spectrum = state_spectrum(states, 3, 4)
    for I in [(1, 2), (2, 4), (1, 3, 4)]:
        direct = class_averages_direct(states, 3, 4, I)
        idx = lambda c: tuple(c if (4 - ax) in I else 0 for ax in range(4))
        for J in range(3):
            S = sum(np.exp(2j * np.pi * c * J / 3) * spectrum[idx(c)] for c in range(3)) / 3 ** 4
            assert np.allclose(S.reshape(3, 3), direct[J], atol=1e-12)


def test_improved_15_uniform_is_po():
    code = build_improved_qrac(CodeParams(2, 2, 15), scheme="uniform")
    rep = verify_parity_oblivious(code)
    assert rep.ok and rep.worst_deviation < 1e-10
    assert rep.checked_sets == 2 ** 15 - 15 - 1


def test_scaled_code_remains_po():
    code = build_improved_qrac(CodeParams(3, 1, 4)).with_scheme(EncodingScheme("scaled", 0.37))
    assert verify_parity_oblivious(code).ok


def test_cube_with_mixed_state_fails():
    cube = build_insphere_qrac(CodeParams(2, 1, 3))
    A = all_inputs(2, 3)
    states = cube.encode_batch(A)
    states[5] = np.eye(2) / 2
    worst = 0.0
    for I in [(1, 2), (1, 3), (2, 3), (1, 2, 3)]:
        avg = class_averages_direct(states, 2, 3, I)
        worst = max(worst, np.abs(avg - np.eye(2) / 2).max())
    assert worst > 1e-3


def test_boosted_classical_rac_fails():
    code = build_classical_rac(CodeParams(2, 2, 3, "classical"), boost_even_parity=True)
    rep = verify_parity_oblivious(code)
    assert not rep.ok and rep.worst_deviation > 0.05


def test_sampled_index_sets():
    code = build_improved_qrac(CodeParams(2, 2, 15))
    rep = verify_parity_oblivious(code, subset_budget=1000, seed=3)
    assert rep.mode == "sampled" and rep.ok and rep.checked_sets == 256


def test_marginal_mode_for_large_codes():
    rep = verify_parity_oblivious(build_improved_qrac(CodeParams(2, 3, 63)))
    assert rep.mode == "marginal" and rep.ok


def test_joint_prob_one_bit():
    assert math.isclose(joint_prob(1, 1, 0.8), 0.8)
    assert math.isclose(joint_prob(0, 1, 0.8), 0.2)


@pytest.mark.parametrize("nu", [1, 2, 5, 9])
def test_joint_prob_no_information(nu):
    for k in range(nu + 1):
        assert math.isclose(joint_prob(k, nu, 0.5), math.comb(nu, k) / 2 ** nu)


def test_joint_prob_saturation():
    assert math.isclose(joint_prob(0, 3, (1 + 1 / 3) / 2), 0.0, abs_tol=1e-15)


def test_joint_prob_nu2_p075():
    # closed form at the bound: both-wrong is impossible
    T = joint_prob_recursive(2, 0.75)
    assert np.allclose(T[2, :3], [0.0, 0.5, 0.5], atol=1e-15)
    assert np.allclose(T[2, :3], [joint_prob(k, 2, 0.75) for k in range(3)])


@given(st.floats(0.5, 0.75))
def test_alternating_sum_vanishes(p):
    T = joint_prob_recursive(2, p)
    assert abs(T[2, 0] - T[2, 1] + T[2, 2]) < 1e-15


@pytest.mark.parametrize("nu,p", [(10, 0.52), (12, 0.52), (7, 0.55), (4, 0.6)])
def test_recursive_matches_closed_form(nu, p):
    assert np.abs(joint_prob_recursive(nu, p) - joint_prob_table(nu, p)).max() < 1e-12


def test_joint_prob_bound_violation():
    with pytest.raises(BoundViolationError):
        joint_prob(1, 3, 0.7)
    with pytest.raises(BoundViolationError):
        joint_prob_recursive(2, 0.4)


def test_po_bound_values():
    assert po_bound(1) == 1.0
    for m in range(1, 5):
        n = 2 ** m - 1
        code = build_classical_rac(CodeParams(2, m, n, "classical"))
        assert math.isclose(exact_report(code, samples=2048).worst_case_p, po_bound(n), abs_tol=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_maximal_qrac_below_bound(m):
    p = (1 + 1 / ((2 ** m - 1) * math.sqrt(2 ** m + 1))) / 2
    assert p < po_bound(2 ** m - 1)
    assert math.isclose((2 * p - 1) / (2 * po_bound(2 ** m - 1) - 1), 1 / math.sqrt(2 ** m + 1))


def test_simultaneous_slots_15():
    code = build_improved_qrac(CodeParams(2, 2, 15))
    seen = []
    for h in range(5):
        s = simultaneous_slots(code, h)
        assert s.common_basis and len(s.slots) == 3
        seen.extend(s.slots)
    assert sorted(seen) == list(range(15))


def test_simultaneous_slots_m3_basis():
    code = build_improved_qrac(CodeParams(2, 3, 63), scheme="uniform")
    # x (x) y (x) z: digits 1, 2, 3 with the leftmost factor first
    k = 1 * 16 + 2 * 4 + 3
    h = basis_of_generator(k, 3)
    assert len(simultaneous_slots(code, h).slots) == 7


def test_simultaneous_slots_anticommuting_subset():
    code = subset_code(anticommuting_set(2), 2)
    for h in range(5):
        assert len(simultaneous_slots(code, h).slots) <= 1


def test_simultaneous_slots_without_common_basis():
    cube = build_insphere_qrac(CodeParams(2, 1, 3))
    rotated = rotate_generator_subset(cube, [0, 1, 2], random_rotation(3, seed=1))
    s = simultaneous_slots(rotated, 0)
    assert s.slots == () and not s.common_basis
