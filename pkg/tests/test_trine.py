import numpy as np
import pytest

from adaptive_qsd.actions import binary_povm, build_action_set
from adaptive_qsd.collective import qubit_min_error
from adaptive_qsd.qstate import BeliefState, joint_density, likelihoods, posterior_update
from adaptive_qsd.trine import (
    ANTI_TRINE_FIRST,
    COLLECTIVE_TWO_COPY,
    anti_trine_povm,
    first_round_bounds,
    maximize_two_element_curve,
    trine_conditional_success,
    trine_ensemble,
    trine_states,
    trine_two_element_curve,
)


def best_second_binary(post):
    """Best two-outcome projective measurement on the second copy, by dense search."""
    t = trine_states()
    thetas = np.linspace(0, np.pi, 20001)
    best = 0.0
    for th in thetas[::10]:
        L = likelihoods(t, binary_povm(th))
        best = max(best, np.max(post[:, None] * L, axis=0).sum())
    return best


class TestStates:
    def test_pairwise_overlaps(self):
        t = trine_states()
        for i in range(3):
            for j in range(3):
                expected = 1.0 if i == j else 0.25
                assert np.trace(t[i] @ t[j]) == pytest.approx(expected, abs=1e-14)

    def test_third_two_copy_state_is_00(self):
        ens = trine_ensemble(2)
        e00 = np.zeros((4, 4))
        e00[0, 0] = 1.0
        np.testing.assert_allclose(joint_density(ens.states[2], [0, 1]), e00, atol=1e-14)

    def test_rejects_zero_copies(self):
        with pytest.raises(ValueError):
            trine_ensemble(0)


class TestAntiTrine:
    def test_complete(self):
        np.testing.assert_allclose(anti_trine_povm().effects.sum(axis=0), np.eye(2), atol=1e-12)

    def test_orthogonal_to_one_state_each(self):
        lik = likelihoods(trine_states(), anti_trine_povm())
        for d in range(3):
            assert np.sum(np.abs(lik[:, d]) < 1e-12) == 1

    def test_posterior_halves(self):
        ens = trine_ensemble(2)
        for d in range(3):
            b = posterior_update(ens, BeliefState.initial(ens), 0, anti_trine_povm(), d)
            np.testing.assert_allclose(np.sort(b.posterior), [0, 0.5, 0.5], atol=1e-12)

    def test_bounds_coincide(self):
        upper, lower = first_round_bounds(anti_trine_povm())
        assert upper == pytest.approx(ANTI_TRINE_FIRST, abs=1e-12)
        assert lower == pytest.approx(ANTI_TRINE_FIRST, abs=1e-12)

    def test_local_gap(self):
        assert COLLECTIVE_TWO_COPY - ANTI_TRINE_FIRST >= 0.038


class TestTwoElementCurve:
    def test_at_zero(self):
        assert trine_two_element_curve(0.0) == pytest.approx(0.5, abs=1e-15)

    def test_maximum(self):
        theta, value = maximize_two_element_curve()
        assert value == pytest.approx(0.5 + np.sqrt(3) / 4, abs=1e-6)
        assert trine_two_element_curve(theta) == pytest.approx(value)

    def test_never_exceeds(self):
        grid = np.linspace(0, np.pi, 200001, endpoint=False)
        assert trine_two_element_curve(grid).max() <= 0.93302

    def test_matches_conditional_success_on_its_branch(self):
        # The closed form is one branch of the exact conditional success and a
        # lower bound for it everywhere.
        for theta in np.linspace(0.505 * np.pi, 0.825 * np.pi, 41):
            assert trine_two_element_curve(theta) == pytest.approx(trine_conditional_success(theta), abs=1e-12)
        for theta in np.linspace(0, np.pi, 181):
            assert trine_two_element_curve(theta) <= trine_conditional_success(theta) + 1e-12

    def test_conditional_success_against_binary_search(self):
        # Wherever the best two-outcome second measurement is optimal, the exact
        # conditional success equals it; elsewhere a three-outcome measurement helps.
        t = trine_states()
        for theta in np.linspace(0, np.pi, 13):
            v = np.array([np.sin(theta), np.cos(theta)])
            post = np.einsum("a,jab,b->j", v, t, v)
            post = post / post.sum()
            binary = best_second_binary(post)
            exact = trine_conditional_success(theta)
            assert exact >= binary - 1e-6
            if exact > binary + 1e-6:
                assert exact <= 0.85

    def test_conditional_max_equals_curve_max(self):
        grid = np.linspace(0, np.pi, 3001)
        cond = max(trine_conditional_success(th) for th in grid)
        assert cond == pytest.approx(maximize_two_element_curve()[1], abs=1e-6)

    def test_conditional_period(self):
        for theta in (0.1, 0.7, 1.3):
            assert trine_conditional_success(theta) == pytest.approx(trine_conditional_success(theta + np.pi / 3), abs=1e-12)


class TestBinaryFirstRound:
    def test_binary_first_round_below_anti_trine(self):
        ens = trine_ensemble(2)
        for povm in build_action_set(60, 2).povms:
            lik = likelihoods(ens.subsystem(0), povm)
            value = sum(qubit_min_error(ens.subsystem(1), ens.prior * lik[:, d] / (ens.prior @ lik[:, d]))
                        * (ens.prior @ lik[:, d]) for d in range(2))
            assert value <= ANTI_TRINE_FIRST + 1e-9
