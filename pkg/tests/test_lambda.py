import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qrac.bloch import PAULI, pauli_string
from qrac.codes import CodeParams, all_inputs, build_improved_qrac, check_measurements
from qrac.errors import InvalidInputError, InvalidScaleError, SearchSpaceTooLargeError
from qrac.evaluate import exact_report
from qrac.lambda_opt import (
    LambdaResult,
    anticommutes,
    anticommuting_partition,
    anticommuting_set,
    apply_scaling,
    census_signature,
    conjecture_bound,
    conjecture_check,
    generator_orientation,
    lambda_exhaustive,
    lambda_random,
    p_from_lambda,
    random_rotation,
    rotate_generator_subset,
    sigma_of_beta,
    spectrum_census,
    subset_code,
    subset_search,
    witness_input,
)

SQ3 = math.sqrt(3)
LAMBDA_15 = 3 + 2 * SQ3


def _brute_lambda(subset, m):
    # oracle: dense eigenvalues of every signed sum
    P = [pauli_string(k, m) for k in subset]
    lo = np.inf
    for signs in itertools.product((1, -1), repeat=len(P)):
        lo = min(lo, np.linalg.eigvalsh(sum(s * p for s, p in zip(signs, P)))[0])
    return -lo


def test_sigma_m1_full():
    S = sigma_of_beta([1, 2, 3], [0, 0, 0], 1)
    assert np.allclose(S, PAULI[1] + PAULI[2] + PAULI[3])
    assert np.allclose(np.linalg.eigvalsh(S), [-SQ3, SQ3])


def test_sigma_m2_all_minus():
    S = sigma_of_beta(range(1, 16), [1] * 15, 2)
    ev = np.linalg.eigvalsh(S)
    assert np.isclose(ev[0], 1 - (1 + SQ3) ** 2)


@given(st.lists(st.integers(0, 1), min_size=15, max_size=15))
def test_sigma_global_flip(beta):
    a = np.linalg.eigvalsh(sigma_of_beta(range(1, 16), beta, 2))
    b = np.linalg.eigvalsh(sigma_of_beta(range(1, 16), [1 - x for x in beta], 2))
    assert np.allclose(a, -b[::-1])


def test_sigma_validation():
    with pytest.raises(InvalidInputError):
        sigma_of_beta([1, 1], [0, 0], 1)
    with pytest.raises(InvalidInputError):
        sigma_of_beta([1, 2], [0, 2], 1)
    with pytest.raises(InvalidInputError):
        sigma_of_beta([4], [0], 1)


def test_lambda_m1():
    res = lambda_exhaustive(2, [1, 2, 3], 1)
    assert math.isclose(res.lambda_, SQ3, abs_tol=1e-12)
    assert math.isclose(res.p, (1 + 1 / SQ3) / 2, abs_tol=1e-12)
    assert res.exhaustive


def test_lambda_m2_full():
    res = lambda_exhaustive(2, range(1, 16), 2)
    assert math.isclose(res.lambda_, LAMBDA_15, abs_tol=1e-9)
    assert math.isclose(res.p, 0.5774, abs_tol=5e-5)
    S = sigma_of_beta(range(1, 16), res.witness, 2)
    assert math.isclose(np.linalg.eigvalsh(S)[0], -res.lambda_, abs_tol=1e-9)


@given(st.sets(st.integers(1, 15), min_size=1, max_size=7))
def test_lambda_matches_brute_force(subset):
    subset = sorted(subset)
    res = lambda_exhaustive(2, subset, 2)
    assert math.isclose(res.lambda_, _brute_lambda(subset, 2), abs_tol=1e-9)


def test_lambda_of_code_uses_orientation():
    code = build_improved_qrac(CodeParams(2, 2, 15), scheme="uniform")
    res = lambda_exhaustive(2, code)
    assert math.isclose(res.lambda_, LAMBDA_15, abs_tol=1e-9)
    assert set(generator_orientation(code)) <= {-1, 1}


def test_lambda_d4_n4_and_n5():
    r4 = lambda_exhaustive(4, build_improved_qrac(CodeParams(4, 1, 4), scheme="uniform"))
    r5 = lambda_exhaustive(4, build_improved_qrac(CodeParams(4, 1, 5), scheme="uniform"))
    assert r4.trials == 256 and r5.trials == 1024
    # frozen oracle values from the exhaustive eigenvalue scan
    assert math.isclose(r4.p, 0.44703, abs_tol=5e-5)
    assert math.isclose(r5.p, 0.41350, abs_tol=5e-5)


def test_lambda_too_large():
    code = build_improved_qrac(CodeParams(3, 2, 10), scheme="uniform")
    lambda_exhaustive(3, code)
    with pytest.raises(SearchSpaceTooLargeError):
        lambda_exhaustive(2, build_improved_qrac(CodeParams(2, 3, 63), scheme="uniform"))


def test_lambda_random_enumerates_small_spaces():
    res = lambda_random(2, 1 << 15, seed=3)
    assert res.exhaustive
    assert math.isclose(res.lambda_, LAMBDA_15, abs_tol=1e-9)


def test_lambda_random_single_trial():
    res = lambda_random(2, 1, seed=8)
    assert res.trials == 1 and not res.exhaustive
    S = sigma_of_beta(range(1, 16), res.witness, 2)
    assert math.isclose(-np.linalg.eigvalsh(S)[0], res.lambda_, abs_tol=1e-9)


def test_lambda_random_reproducible():
    a = lambda_random(3, 500, seed=5)
    b = lambda_random(3, 500, seed=5)
    assert a == b


def test_result_json():
    res = lambda_exhaustive(2, [1, 2, 3], 1)
    d = res.to_dict()
    assert set(d) == {"lambda", "p", "witness_pattern", "witness_input", "subset", "exhaustive", "trials", "seed"}


@pytest.mark.parametrize("m", [1, 2])
def test_conjecture_exhaustive(m):
    rep = conjecture_check(m, "exhaustive")
    assert not rep.violated and rep.attained
    assert math.isclose(rep.extremum, conjecture_bound(m), abs_tol=1e-9)


def test_conjecture_m4_random_margin():
    rep = conjecture_check(4, "random", budget=10 ** 3, seed=2)
    assert not rep.violated
    assert rep.margin > 0
    assert rep.to_dict()["margin"] == rep.margin


def test_conjecture_bad_mode():
    with pytest.raises(InvalidInputError):
        conjecture_check(1, "sideways")
    with pytest.raises(SearchSpaceTooLargeError):
        conjecture_check(3, "exhaustive")


@pytest.mark.parametrize("m", [1, 2, 3])
def test_anticommuting_set(m):
    gens = anticommuting_set(m)
    assert len(gens) == 2 * m + 1
    for a, b in itertools.combinations(gens, 2):
        A, B = pauli_string(a, m), pauli_string(b, m)
        assert np.allclose(A @ B + B @ A, 0)
        assert anticommutes(a, b, m)


def test_anticommuting_set_m2_lambda():
    res = lambda_exhaustive(2, anticommuting_set(2), 2)
    assert math.isclose(res.lambda_, math.sqrt(5), abs_tol=1e-12)
    assert math.isclose(res.p, (1 + 1 / math.sqrt(5)) / 2, abs_tol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_subset_search_sqrt_n(n):
    res = subset_search(n, 2)
    assert math.isclose(res.lambda_, math.sqrt(n), abs_tol=1e-9)
    assert math.isclose(res.p, (1 + 1 / math.sqrt(n)) / 2, abs_tol=1e-9)


@pytest.mark.parametrize(
    "n,p",
    [(6, (1 + 1 / math.sqrt(6 + math.sqrt(12))) / 2), (9, (1 + 1 / math.sqrt(17)) / 2), (12, 0.5917)],
)
def test_subset_search_rows(n, p):
    res = subset_search(n, 2)
    tol = 1e-9 if n != 12 else 1e-4
    assert math.isclose(res.p, p, abs_tol=tol)
    assert math.isclose(lambda_exhaustive(2, res.best_subset, 2).lambda_, res.lambda_, abs_tol=1e-12)


def test_subset_code_matches_generators():
    gens = anticommuting_set(2)
    code = subset_code(gens, 2)
    assert tuple(mm.generator_index for mm in code.measurements) == tuple(gens)


def test_apply_scaling_15():
    code = build_improved_qrac(CodeParams(2, 2, 15), scheme="uniform")
    res = lambda_exhaustive(2, code)
    scaled = apply_scaling(code, res)
    assert math.isclose(scaled.scheme.K, 15 / LAMBDA_15)
    rep = exact_report(scaled)
    assert math.isclose(rep.worst_case_p, (1 + 1 / LAMBDA_15) / 2, abs_tol=1e-9)
    assert rep.worst_case_p > 0.57454
    rho = scaled.encode(witness_input(code, res))
    assert abs(np.linalg.eigvalsh(rho)[0]) < 1e-9


def test_apply_scaling_commuting_worst_case():
    # three commuting generators: lambda = n and K = 1 recovers the uniform mixture
    code = build_improved_qrac(CodeParams(2, 2, 3), scheme="uniform")
    res = lambda_exhaustive(2, code)
    assert math.isclose(res.lambda_, 3, abs_tol=1e-12)
    scaled = apply_scaling(code, res)
    assert math.isclose(scaled.scheme.K, 1.0)
    assert math.isclose(exact_report(scaled).worst_case_p, 2 / 3, abs_tol=1e-12)


def test_apply_scaling_rejects_small_lambda():
    code = build_improved_qrac(CodeParams(2, 2, 15), scheme="uniform")
    res = lambda_exhaustive(2, code)
    bad = LambdaResult(res.lambda_ * 0.9, res.witness, True, res.trials, 2, res.subset)
    with pytest.raises(InvalidScaleError):
        apply_scaling(code, bad)


def test_apply_scaling_general_d():
    code = build_improved_qrac(CodeParams(3, 1, 4), scheme="uniform")
    res = lambda_exhaustive(3, code)
    scaled = apply_scaling(code, res)
    assert math.isclose(exact_report(scaled).worst_case_p, res.p, abs_tol=1e-9)
    assert abs(np.linalg.eigvalsh(scaled.encode(res.witness_input))[0]) < 1e-9


@pytest.mark.parametrize("d", [3, 5])
def test_spectrum_census_small(d):
    rep = spectrum_census(d)
    assert rep.confirmed and rep.matching == d * d
    assert rep.zero_counts[(d - 1) // 2] == d * d
    assert rep.total == d ** (d + 1)


def test_census_signature():
    assert np.allclose(census_signature(3), [0, 0.5, 0.5])
    assert np.allclose(census_signature(7), [0, 0, 0, 0.25, 0.25, 0.25, 0.25])


def test_random_rotation_is_special_orthogonal():
    O = random_rotation(3, seed=4)
    assert np.allclose(O @ O.T, np.eye(3))
    assert math.isclose(np.linalg.det(O), 1.0)
    assert np.array_equal(O, random_rotation(3, seed=4))


def test_anticommuting_partition_of_15():
    groups = anticommuting_partition(range(1, 16), 2)
    assert groups is not None and len(groups) == 5
    assert sorted(k for g in groups for k in g) == list(range(1, 16))
    assert anticommuting_partition(range(1, 15), 2) is None


def test_identity_rotation_is_noop():
    code = build_improved_qrac(CodeParams(2, 2, 15), scheme="uniform")
    group = anticommuting_partition(range(1, 16), 2)[0]
    slots = [next(s for s, mm in enumerate(code.measurements) if mm.generator_index == k) for k in group]
    rot = rotate_generator_subset(code, slots, np.eye(3))
    for a, b in zip(rot.measurements, code.measurements):
        assert np.allclose(a.operators, b.operators)


def test_rotated_triple_stays_valid(capsys):
    code = build_improved_qrac(CodeParams(2, 2, 15), scheme="uniform")
    base = lambda_exhaustive(2, code).lambda_
    group = anticommuting_partition(range(1, 16), 2)[0]
    slots = [next(s for s, mm in enumerate(code.measurements) if mm.generator_index == k) for k in group]
    observed = []
    for seed in range(3):
        rot = rotate_generator_subset(code, slots, random_rotation(3, seed))
        err, psd = check_measurements(rot)
        assert err < 1e-10 and psd
        assert all(mm.is_pvm for mm in rot.measurements)
        observed.append(lambda_exhaustive(2, rot).lambda_)
    # recorded, not asserted: rotations are not expected to lower lambda
    print("unrotated lambda", base, "rotated", observed)
    assert all(np.isfinite(observed))


def test_rotation_requires_anticommuting_slots():
    code = build_improved_qrac(CodeParams(2, 2, 15), scheme="uniform")
    with pytest.raises(InvalidInputError):
        rotate_generator_subset(code, [0, 1, 2], np.eye(3))


def test_p_from_lambda():
    assert math.isclose(p_from_lambda(2, 15), (1 + 1 / 15) / 2)
    assert math.isclose(p_from_lambda(4, 3), 0.5)
