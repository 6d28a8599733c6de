"""Quantized binary qubit measurements and the (measurement, subsystem) action set."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .qstate import Povm

DEFAULT_Q = 20


def quantized_angle(ell, Q):
    """Angle ``ell * pi / (2Q)`` of the ``ell``-th quantized POVM (``ell`` is 1-based)."""
    return ell * np.pi / (2 * Q)


def binary_povm(theta):
    """Projective pair with first effect along ``(sin theta, cos theta)``."""
    s, c = np.sin(theta), np.cos(theta)
    first = np.array([[s * s, s * c], [s * c, c * c]])
    second = np.array([[c * c, -s * c], [-s * c, s * s]])
    return Povm(np.array([first, second]), f"theta={theta:.6g}")


def quantized_povms(Q=DEFAULT_Q):
    if Q < 1:
        raise ValueError("Q must be at least 1")
    return [binary_povm(quantized_angle(ell, Q)) for ell in range(1, Q + 1)]


class Action(NamedTuple):
    """Measure ``subsystem`` with POVM number ``povm`` of an action set (both 0-based)."""

    povm: int
    subsystem: int


@dataclass(frozen=True, eq=False)
class ActionSet:
    """All (POVM, subsystem) pairs for ``n`` qubits.

    The first ``Q`` POVMs are the quantized binary family; ``extras`` (for example
    the 3-outcome anti-trine) are appended after them. Flat ids are
    subsystem-major: ``id = subsystem * len(povms) + povm``.
    """

    Q: int
    n: int
    povms: tuple

    @property
    def per_subsystem(self):
        return len(self.povms)

    def __len__(self):
        return self.n * len(self.povms)

    def encode(self, action):
        if not (0 <= action.povm < self.per_subsystem and 0 <= action.subsystem < self.n):
            raise IndexError(f"action {action} out of range")
        return action.subsystem * self.per_subsystem + action.povm

    def decode(self, action_id):
        return decode_action(action_id, self.per_subsystem, self.n)

    def actions(self, subsystems=None):
        subsystems = range(self.n) if subsystems is None else subsystems
        return [Action(i, k) for k in subsystems for i in range(self.per_subsystem)]

    def with_extras(self, *extras):
        return ActionSet(self.Q, self.n, tuple(self.povms) + tuple(extras))


def build_action_set(Q=DEFAULT_Q, n=1, extras=()):
    if n < 1:
        raise ValueError("n must be at least 1")
    return ActionSet(Q, n, tuple(quantized_povms(Q)) + tuple(extras))


def decode_action(action_id, Q, n=None):
    """Inverse of the flat encoding ``id = subsystem * Q + povm``."""
    action_id = int(action_id)
    if action_id < 0 or (n is not None and action_id >= n * Q):
        raise IndexError(f"action id {action_id} out of range")
    return Action(action_id % Q, action_id // Q)


def encode_action(action, Q):
    return action.subsystem * Q + action.povm
