"""Real qubit density matrices, product ensembles, POVMs and Bayesian updates.

All matrices are real. A product ensemble is stored as one array of shape
``(m, n, 2, 2)``: hypothesis ``j``, subsystem ``k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import DimensionError, EmptySubset, ImpossibleOutcome, InvalidPovm, InvalidState

STATE_TOL = 1e-12
EFFECT_TOL = 1e-10


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def validate_density(matrix, tol=STATE_TOL):
    """Return ``matrix`` as a float array after checking it is a density matrix.

    Raises
    ------
    InvalidState
        If the matrix is not square, symmetric, trace one and PSD within ``tol``.
    """
    rho = np.asarray(matrix, dtype=float)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidState(f"expected a square matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.T)) > tol:
        raise InvalidState("density matrix is not symmetric")
    if abs(np.trace(rho) - 1.0) > tol:
        raise InvalidState(f"trace is {np.trace(rho)!r}, expected 1")
    if np.linalg.eigvalsh(rho)[0] < -tol:
        raise InvalidState("density matrix has a negative eigenvalue")
    return rho


def pure_state(phi):
    """Projector onto the real qubit vector ``(cos phi, sin phi)``."""
    v = np.array([np.cos(phi), np.sin(phi)])
    return np.outer(v, v)


def depolarize(rho, p):
    d = rho.shape[-1]
    return (1.0 - p) * rho + p * np.eye(d) / d


@dataclass(frozen=True, eq=False)
class Povm:
    """A measurement given by PSD effects that sum to the identity.

    ``effects`` has shape ``(k, d, d)``.
    """

    effects: np.ndarray
    label: str = ""

    def __post_init__(self):
        effects = np.asarray(self.effects, dtype=float)
        if effects.ndim != 3 or effects.shape[1] != effects.shape[2]:
            raise DimensionError(f"effects must have shape (k, d, d), got {effects.shape}")
        d = effects.shape[1]
        if np.max(np.abs(effects - effects.transpose(0, 2, 1))) > EFFECT_TOL:
            raise InvalidPovm("effects must be symmetric")
        if np.min(np.linalg.eigvalsh(effects)) < -EFFECT_TOL:
            raise InvalidPovm("effects must be positive semidefinite")
        if np.max(np.abs(effects.sum(axis=0) - np.eye(d))) > EFFECT_TOL:
            raise InvalidPovm("effects must sum to the identity")
        object.__setattr__(self, "effects", _frozen(effects))

    @property
    def dim(self):
        return self.effects.shape[1]

    def __len__(self):
        return self.effects.shape[0]

    def __iter__(self):
        return iter(self.effects)

    def __getitem__(self, i):
        return self.effects[i]


def computational_povm():
    return Povm(np.array([[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]]), "Z")


@dataclass(frozen=True, eq=False)
class Ensemble:
    """``m`` candidate product states over ``n`` qubits with a prior.

    Parameters
    ----------
    states : array_like, shape (m, n, 2, 2)
        ``states[j, k]`` is the k-th qubit factor of hypothesis j.
    prior : array_like, shape (m,)
    """

    states: np.ndarray
    prior: np.ndarray
    meta: dict | None = None

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 4 or states.shape[2:] != (2, 2):
            raise DimensionError(f"states must have shape (m, n, 2, 2), got {states.shape}")
        for j in range(states.shape[0]):
            for k in range(states.shape[1]):
                validate_density(states[j, k])
        prior = np.asarray(self.prior, dtype=float)
        if prior.shape != (states.shape[0],):
            raise DimensionError("prior length must equal the number of hypotheses")
        if np.any(prior < 0) or abs(prior.sum() - 1.0) > STATE_TOL:
            raise InvalidState("prior must be a probability vector")
        object.__setattr__(self, "states", _frozen(states))
        object.__setattr__(self, "prior", _frozen(prior))
        object.__setattr__(self, "meta", dict(self.meta or {}))

    @classmethod
    def from_factors(cls, factors: Sequence[Sequence], prior=None, meta=None):
        """Build from nested lists ``factors[j][k]`` of 2x2 matrices."""
        states = np.array([[np.asarray(f, dtype=float) for f in row] for row in factors])
        if prior is None:
            prior = np.full(len(states), 1.0 / len(states))
        return cls(states, prior, meta)

    @property
    def m(self):
        return self.states.shape[0]

    @property
    def n(self):
        return self.states.shape[1]

    def subsystem(self, k):
        """Factors of every hypothesis on qubit ``k``, shape ``(m, 2, 2)``."""
        return self.states[:, k]

    def joint_states(self, subset=None):
        """Joint density matrices of every hypothesis on ``subset`` (default: all)."""
        if subset is None:
            subset = range(self.n)
        return np.array([joint_density(self.states[j], subset) for j in range(self.m)])

    def with_prior(self, prior):
        return Ensemble(self.states, prior, self.meta)


@dataclass(frozen=True, eq=False)
class BeliefState:
    """Measured-subsystem mask and current posterior over hypotheses."""

    mask: tuple
    posterior: np.ndarray

    def __post_init__(self):
        post = np.asarray(self.posterior, dtype=float)
        if np.any(post < 0) or abs(post.sum() - 1.0) > 1e-10:
            raise ValueError("posterior must be a probability vector")
        object.__setattr__(self, "mask", tuple(bool(v) for v in self.mask))
        object.__setattr__(self, "posterior", _frozen(post))

    @classmethod
    def initial(cls, ensemble):
        return cls((False,) * ensemble.n, ensemble.prior)

    @property
    def unmeasured(self):
        return [k for k, v in enumerate(self.mask) if not v]

    def observation(self):
        return np.concatenate([np.asarray(self.mask, dtype=float), self.posterior])


def born_probabilities(state, povm):
    """Outcome probabilities ``Tr[E_i rho]`` of measuring ``state`` with ``povm``."""
    rho = np.asarray(state, dtype=float)
    if rho.shape != (povm.dim, povm.dim):
        raise DimensionError(f"state of shape {rho.shape} vs POVM dimension {povm.dim}")
    return np.einsum("kab,ba->k", povm.effects, rho)


def likelihoods(factors, povm):
    """Matrix ``L[j, d] = Tr[E_d rho_j]`` for a stack of factors ``(m, d, d)``."""
    factors = np.asarray(factors, dtype=float)
    if factors.shape[1:] != (povm.dim, povm.dim):
        raise DimensionError(f"factors of shape {factors.shape[1:]} vs POVM dimension {povm.dim}")
    return np.einsum("kab,jba->jk", povm.effects, factors)


def posterior_update(ensemble, belief, subsystem, povm, outcome):
    """Bayes update of ``belief`` after observing ``outcome`` on ``subsystem``.

    Raises
    ------
    ValueError
        If ``subsystem`` was already measured or ``outcome`` is out of range.
    ImpossibleOutcome
        If the outcome has zero probability under the current posterior.
    """
    if belief.mask[subsystem]:
        raise ValueError(f"subsystem {subsystem} was already measured")
    if not 0 <= outcome < len(povm):
        raise ValueError(f"outcome {outcome} out of range for a {len(povm)}-outcome POVM")
    lik = likelihoods(ensemble.subsystem(subsystem), povm)[:, outcome]
    weights = belief.posterior * np.clip(lik, 0.0, None)
    total = weights.sum()
    if total <= 0.0:
        raise ImpossibleOutcome(f"outcome {outcome} on subsystem {subsystem} has probability 0")
    mask = list(belief.mask)
    mask[subsystem] = True
    return BeliefState(tuple(mask), weights / total)


def joint_density(factors, subset):
    """Kronecker product of ``factors[i]`` for ``i`` in ``subset`` (ascending order)."""
    idx = sorted(subset)
    if not idx:
        raise EmptySubset("subset must contain at least one index")
    if len(set(idx)) != len(idx):
        raise ValueError("subset indices must be distinct")
    if idx[0] < 0 or idx[-1] >= len(factors):
        raise IndexError("subset index out of range")
    return reduce(np.kron, (np.asarray(factors[i], dtype=float) for i in idx))


def trace_norm(matrix):
    """Sum of absolute eigenvalues of a real symmetric matrix."""
    a = np.asarray(matrix, dtype=float)
    return float(np.abs(np.linalg.eigvalsh((a + a.T) / 2)).sum())


def operator_norm(matrix):
    """Largest singular value."""
    return float(np.linalg.norm(np.asarray(matrix, dtype=float), 2))


def rotation(theta):
    """Real rotation ``[[cos, sin], [-sin, cos]]`` used for over-rotation noise."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])
