"""Sequential measurement environment for a product-state ensemble.

Observation: the measured-subsystem mask followed by the posterior, width ``n + m``.
Each step measures one qubit with one quantized binary POVM. Choosing an
already-measured qubit costs ``penalty`` and leaves the state unchanged. Once a
single qubit remains, it is measured optimally and the episode ends with the
expected success probability of that measurement as the reward.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..actions import DEFAULT_Q, build_action_set
from ..local import _FinalRound
from ..qstate import BeliefState, posterior_update

REMEASURE_PENALTY = -0.3


class MeasurementEnv:
    """Single-episode environment.

    Parameters
    ----------
    ensemble : Ensemble
    Q : int
        Number of quantized measurements per qubit.
    penalty : float
        Reward for choosing an already-measured qubit.
    max_steps_factor : int
        Episodes are cut off after ``max_steps_factor * n`` steps.
    """

    def __init__(self, ensemble, Q=DEFAULT_Q, penalty=REMEASURE_PENALTY, max_steps_factor=4):
        if ensemble.n < 2:
            raise ValueError("the environment needs at least two qubits")
        self.ensemble = ensemble
        self.action_set = build_action_set(Q, ensemble.n)
        self.Q = Q
        self.penalty = penalty
        self.max_steps = max_steps_factor * ensemble.n
        self.final = _FinalRound(ensemble)
        self.rng = np.random.default_rng()
        self.belief = None
        self.true_hypothesis = None
        self.steps = 0
        self.done = True

    @property
    def n_actions(self):
        return len(self.action_set)

    @property
    def observation_size(self):
        return self.ensemble.n + self.ensemble.m

    def reset(self, seed=None):
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.true_hypothesis = int(self.rng.choice(self.ensemble.m, p=self.ensemble.prior))
        self.belief = BeliefState.initial(self.ensemble)
        self.steps = 0
        self.done = False
        return self.belief.observation()

    def step(self, action_id):
        """Returns ``(observation, reward, done, info)``."""
        if self.done:
            raise RuntimeError("episode finished; call reset()")
        action = self.action_set.decode(action_id)
        self.steps += 1
        info = {"action": action}
        if self.belief.mask[action.subsystem]:
            reward = self.penalty
            info["remeasured"] = True
        else:
            povm = self.action_set.povms[action.povm]
            rho = self.ensemble.states[self.true_hypothesis, action.subsystem]
            p0 = float(np.clip(np.trace(povm[0] @ rho), 0.0, 1.0))
            outcome = 0 if self.rng.random() < p0 else 1
            self.belief = posterior_update(self.ensemble, self.belief, action.subsystem, povm, outcome)
            info["outcome"] = outcome
            reward = 0.0
            remaining = self.belief.unmeasured
            if len(remaining) == 1:
                reward = float(self.final(remaining[0], self.belief.posterior))
                self.done = True
        if self.steps >= self.max_steps:
            self.done = True
        return self.belief.observation(), reward, self.done, info


@dataclass
class Trajectory:
    """One episode: per-step arrays plus whether it ended by reaching one qubit."""

    observations: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    terminal: bool

    def __len__(self):
        return len(self.actions)

    @property
    def total_reward(self):
        return float(self.rewards.sum())


class BatchRollout:
    """Vectorized episodes sharing one ensemble and one action set."""

    def __init__(self, ensemble, Q=DEFAULT_Q, penalty=REMEASURE_PENALTY, max_steps_factor=4):
        self.ensemble = ensemble
        self.Q = Q
        self.penalty = penalty
        self.max_steps = max_steps_factor * ensemble.n
        self.action_set = build_action_set(Q, ensemble.n)
        self.final = _FinalRound(ensemble)
        # (n, Q, m, 2): probability of each outcome for each hypothesis
        povms = np.array([p.effects for p in self.action_set.povms])
        self.lik = np.einsum("qdab,jkba->kqjd", povms, ensemble.states)

    def run(self, policy_fn, n_episodes, rng):
        """Play ``n_episodes`` episodes; ``policy_fn(obs) -> (probs, values)``."""
        ens = self.ensemble
        n, m, Q = ens.n, ens.m, self.Q
        truth = rng.choice(m, size=n_episodes, p=ens.prior)
        mask = np.zeros((n_episodes, n))
        post = np.tile(np.asarray(ens.prior, dtype=float), (n_episodes, 1))
        active = np.ones(n_episodes, dtype=bool)
        terminal = np.zeros(n_episodes, dtype=bool)
        rec = {key: [] for key in ("obs", "act", "logp", "val", "rew", "alive")}
        rows = np.arange(n_episodes)
        for _ in range(self.max_steps):
            if not active.any():
                break
            obs = np.concatenate([mask, post], axis=1)
            probs, values = policy_fn(obs)
            cdf = np.cumsum(probs, axis=1)
            u = rng.random(n_episodes) * cdf[:, -1]
            act = np.minimum((cdf < u[:, None]).sum(axis=1), probs.shape[1] - 1)
            logp = np.log(np.maximum(probs[rows, act], 1e-300))
            k, i = act // Q, act % Q
            reward = np.zeros(n_episodes)
            again = mask[rows, k] > 0
            reward[again] = self.penalty
            fresh = active & ~again
            draws = rng.random(n_episodes)
            L = self.lik[k, i]  # (B, m, 2)
            p0 = L[rows, truth, 0]
            outcome = np.where(draws < p0, 0, 1)
            new_post = post * L[rows, :, outcome]
            new_post /= new_post.sum(axis=1, keepdims=True)
            post = np.where(fresh[:, None], new_post, post)
            mask[fresh, k[fresh]] = 1.0
            ending = fresh & (mask.sum(axis=1) == n - 1)
            for last in range(n):
                sel = ending & (mask[:, last] == 0)
                if sel.any():
                    reward[sel] = self.final(last, post[sel])
            for key, val in zip(("obs", "act", "logp", "val", "rew", "alive"),
                                (obs, act, logp, values, reward, active.copy())):
                rec[key].append(val)
            terminal |= ending
            active &= ~ending
        return self._split(rec, terminal)

    def _split(self, rec, terminal):
        arrays = {key: np.stack(v, axis=1) for key, v in rec.items()}
        out = []
        for b in range(len(terminal)):
            T = int(arrays["alive"][b].sum())
            out.append(Trajectory(arrays["obs"][b, :T], arrays["act"][b, :T], arrays["logp"][b, :T],
                                  arrays["val"][b, :T], arrays["rew"][b, :T], bool(terminal[b])))
        return out
