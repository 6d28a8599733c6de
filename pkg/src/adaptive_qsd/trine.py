"""Trine ensemble: the pure-state example where local strategies fall short."""
from __future__ import annotations

import numpy as np
from scipy import optimize

from .collective import qubit_min_error
from .qstate import Ensemble, Povm, likelihoods

TRINE_ANGLE = 2 * np.pi / 3

# closed-form reference values for two copies, uniform prior
COLLECTIVE_TWO_COPY = (3 + 2 * np.sqrt(2)) / 6
ANTI_TRINE_FIRST = 0.5 + np.sqrt(3) / 4
GREEDY_TWO_COPY = 0.8


def trine_rotation():
    c, s = np.cos(TRINE_ANGLE), np.sin(TRINE_ANGLE)
    return np.array([[c, -s], [s, c]])


def trine_states():
    """Single-qubit trine projectors onto ``U^j (1, 0)`` for ``j = 1, 2, 3``."""
    U = trine_rotation()
    vecs = [np.linalg.matrix_power(U, j) @ np.array([1.0, 0.0]) for j in (1, 2, 3)]
    return np.array([np.outer(v, v) for v in vecs])


def trine_ensemble(copies=2):
    """Three hypotheses, each ``copies`` identical trine factors, uniform prior."""
    if copies < 1:
        raise ValueError("copies must be at least 1")
    single = trine_states()
    states = np.repeat(single[:, None], copies, axis=1)
    return Ensemble(states, np.full(3, 1 / 3), {"name": "trine", "copies": copies})


def anti_trine_povm():
    """Three effects ``(2/3)(I - rho_j)``; outcome ``j`` never occurs for trine state ``j``."""
    effects = 2.0 / 3.0 * (np.eye(2)[None] - trine_states())
    return Povm(effects, "anti-trine")


def trine_two_element_curve(theta):
    """Expected success when the first-qubit outcome is the projector onto ``(sin, cos)``
    of ``theta`` and the second qubit is optimally measured with two outcomes."""
    theta = np.asarray(theta, dtype=float)
    sc = np.cos(theta) * np.sin(theta)
    c2 = np.cos(2 * theta)
    inner = 5 / 12 - c2 / 6 - sc / np.sqrt(3)
    return 1 / 3 - c2 / 12 - sc / (2 * np.sqrt(3)) + 0.5 * np.sqrt(np.clip(inner, 0.0, None))


def trine_conditional_success(theta):
    """Success probability conditioned on first-qubit outcome ``Pi(theta)`` (exact).

    Computed directly: posterior from the outcome, then the optimal second-qubit
    measurement. Independent of :func:`trine_two_element_curve`.
    """
    v = np.array([np.sin(theta), np.cos(theta)])
    proj = np.outer(v, v)
    single = trine_states()
    post = (single @ proj).trace(axis1=1, axis2=2) / 3
    if post.sum() <= 0:
        return 0.0
    return qubit_min_error(single, post / post.sum())


def maximize_two_element_curve(grid_step=1e-5):
    """Maximum of :func:`trine_two_element_curve` over ``[0, pi)``: grid then local refine."""
    grid = np.arange(0.0, np.pi, grid_step)
    i = int(np.argmax(trine_two_element_curve(grid)))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda t: -trine_two_element_curve(t), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-12})
    return float(res.x), float(-res.fun)


def first_round_bounds(povm, ensemble=None):
    """Upper and lower bounds (max and min over outcomes of the conditional success)
    for a first-qubit measurement on the two-copy trine."""
    ensemble = ensemble or trine_ensemble(2)
    lik = likelihoods(ensemble.subsystem(0), povm)
    values = []
    for d in range(lik.shape[1]):
        w = ensemble.prior * lik[:, d]
        if w.sum() > 0:
            values.append(qubit_min_error(ensemble.subsystem(1), w / w.sum()))
    return max(values), min(values)
