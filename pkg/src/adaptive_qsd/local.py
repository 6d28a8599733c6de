"""Locally-adaptive strategies: exact evaluation, DP oracle and heuristics.

A policy measures one qubit per round and chooses each measurement from the
outcomes seen so far. The last unmeasured qubit is always measured with the
optimal (collective) measurement for the current posterior, so a policy only
specifies the first ``n - 1`` rounds.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .actions import Action, ActionSet
from .collective import qubit_success, sdp_min_error
from .errors import PolicyGap
from .qstate import joint_density, likelihoods

TIE_TOL = 1e-12


@dataclass
class AdaptivePolicy:
    """Measurement tree keyed by outcome history.

    ``decisions[history]`` is the action taken after observing ``history``
    (a tuple of outcome indices); the root is ``()``.
    """

    n: int
    action_set: ActionSet
    decisions: dict = field(default_factory=dict)
    value: float | None = None
    name: str = ""

    def depth(self):
        return max((len(h) + 1 for h in self.decisions), default=0)

    def measured_along(self, history):
        """Subsystems measured before reaching ``history``."""
        return [self.decisions[history[:i]].subsystem for i in range(len(history))]

    def povm(self, action):
        return self.action_set.povms[action.povm]


class _FinalRound:
    """Optimal last-round success on each qubit, batched over weight vectors.

    Hypotheses sharing an identical factor on the last qubit cannot be told
    apart there, so only the largest weight in each such group matters.
    """

    def __init__(self, ensemble):
        self.groups = []
        for k in range(ensemble.n):
            factors = ensemble.subsystem(k)
            uniq, inverse = np.unique(factors.reshape(ensemble.m, -1), axis=0, return_inverse=True)
            member = np.zeros((ensemble.m, len(uniq)), dtype=bool)
            member[np.arange(ensemble.m), np.ravel(inverse)] = True
            self.groups.append((uniq.reshape(-1, 2, 2), member))

    def __call__(self, k, weights):
        uniq, member = self.groups[k]
        w = np.asarray(weights, dtype=float)
        grouped = np.max(np.where(member, w[..., :, None], -np.inf), axis=-2)
        return qubit_success(grouped[..., :, None, None] * uniq)


class _Likelihoods:
    def __init__(self, ensemble, action_set):
        self.table = [[likelihoods(ensemble.subsystem(k), povm) for povm in action_set.povms]
                      for k in range(ensemble.n)]
        self.binary = {}
        for k in range(ensemble.n):
            ids = [i for i, p in enumerate(action_set.povms) if len(p) == 2]
            self.binary[k] = (ids, np.array([self.table[k][i] for i in ids]).reshape(len(ids), ensemble.m, 2))

    def __call__(self, k, i):
        return self.table[k][i]


def evaluate_policy(ensemble, policy, final=None):
    """Exact expected success probability of ``policy`` on ``ensemble``.

    Sums, over every outcome path with nonzero probability, the optimal
    last-round success given the path's (unnormalized) posterior.

    Raises
    ------
    PolicyGap
        If a reachable history with two or more unmeasured qubits has no decision.
    """
    final = final or _FinalRound(ensemble)
    n = ensemble.n
    if policy.n != n:
        raise ValueError("policy and ensemble disagree on the number of qubits")

    def walk(history, mask, weights):
        remaining = [k for k in range(n) if not mask[k]]
        if len(remaining) == 1:
            return float(final(remaining[0], weights))
        try:
            action = policy.decisions[history]
        except KeyError:
            raise PolicyGap(f"no decision for outcome history {history}") from None
        k = action.subsystem
        if mask[k]:
            raise ValueError(f"policy re-measures subsystem {k} after history {history}")
        lik = likelihoods(ensemble.subsystem(k), policy.povm(action))
        child_mask = mask[:k] + (True,) + mask[k + 1:]
        total = 0.0
        for d in range(lik.shape[1]):
            w = weights * np.clip(lik[:, d], 0.0, None)
            if w.sum() > 0.0:
                total += walk(history + (d,), child_mask, w)
        return total

    return walk((), (False,) * n, np.asarray(ensemble.prior, dtype=float))


def _pick(scores):
    """Index of the best score; ties within TIE_TOL go to the lowest index."""
    scores = np.asarray(scores)
    return int(np.flatnonzero(scores >= scores.max() - TIE_TOL)[0])


def _key(mask, post):
    return mask, tuple(np.round(post, 12))


def dp_optimal_local(ensemble, action_set):
    """Optimal locally-adaptive policy over ``action_set`` by exhaustive dynamic programming.

    The search visits every (measured set, posterior) pair reachable by some
    sequence of actions, which grows like ``prod_k 2 k |A|``; desk scale is
    ``n <= 4`` at ``Q = 20``. Belief states are memoized on the posterior
    rounded to 12 decimals.
    """
    n, m = ensemble.n, ensemble.m
    final = _FinalRound(ensemble)
    lik = _Likelihoods(ensemble, action_set)
    per = action_set.per_subsystem
    memo = {}

    def last_two(mask, post, remaining):
        best_v, best_id = -np.inf, None
        for k in remaining:
            other = remaining[0] if remaining[1] == k else remaining[1]
            ids, stack = lik.binary[k]
            scores = np.full(per, -np.inf)
            if ids:
                W = post[None, :, None] * stack
                scores[ids] = final(other, W.transpose(0, 2, 1)).sum(axis=1)
            for i in range(per):
                if i in ids:
                    continue
                W = post[:, None] * lik(k, i)
                scores[i] = final(other, W.T).sum()
            i = _pick(scores)
            if scores[i] > best_v + TIE_TOL:
                best_v, best_id = scores[i], k * per + i
        return best_v, action_set.decode(best_id)

    def solve(mask, post):
        key = _key(mask, post)
        if key in memo:
            return memo[key][0]
        remaining = [k for k in range(n) if not mask[k]]
        if len(remaining) == 1:
            value, action = float(final(remaining[0], post)), None
        elif len(remaining) == 2:
            value, action = last_two(mask, post, remaining)
        else:
            value, action = -np.inf, None
            for k in remaining:
                child_mask = mask[:k] + (True,) + mask[k + 1:]
                for i in range(per):
                    L = lik(k, i)
                    total = 0.0
                    for d in range(L.shape[1]):
                        w = post * L[:, d]
                        pd = w.sum()
                        if pd > 0.0:
                            total += pd * solve(child_mask, w / pd)
                    if total > value + TIE_TOL:
                        value, action = total, Action(i, k)
        memo[key] = (value, action)
        return value

    root_mask = (False,) * n
    value = solve(root_mask, np.asarray(ensemble.prior, dtype=float))
    policy = AdaptivePolicy(n, action_set, name="dp")

    def build(history, mask, post):
        action = memo[_key(mask, post)][1]
        if action is None:
            return
        policy.decisions[history] = action
        L = lik(action.subsystem, action.povm)
        child_mask = mask[:action.subsystem] + (True,) + mask[action.subsystem + 1:]
        for d in range(L.shape[1]):
            w = post * L[:, d]
            if w.sum() > 0.0:
                child = w / w.sum()
                if sum(child_mask) < n - 1:
                    solve(child_mask, child)
                    build(history + (d,), child_mask, child)

    build((), root_mask, np.asarray(ensemble.prior, dtype=float))
    policy.value = evaluate_policy(ensemble, policy, final)
    return policy


def _expand(ensemble, action_set, choose, name, extra_povms=None):
    """Grow a policy tree by calling ``choose(mask, post) -> Action`` at each node."""
    n = ensemble.n
    policy = AdaptivePolicy(n, action_set, name=name)

    def grow(history, mask, post):
        if sum(mask) >= n - 1:
            return
        action = choose(mask, post)
        policy.decisions[history] = action
        povm = (action_set.povms + tuple(extra_povms or ()))[action.povm]
        L = likelihoods(ensemble.subsystem(action.subsystem), povm)
        child_mask = mask[:action.subsystem] + (True,) + mask[action.subsystem + 1:]
        for d in range(L.shape[1]):
            w = post * np.clip(L[:, d], 0.0, None)
            if w.sum() > 0.0:
                grow(history + (d,), child_mask, w / w.sum())

    grow((), (False,) * n, np.asarray(ensemble.prior, dtype=float))
    if extra_povms:
        policy.action_set = action_set.with_extras(*extra_povms)
    policy.value = evaluate_policy(ensemble, policy)
    return policy


def locally_greedy(ensemble, action_set, *, optimal_candidates=False):
    """Policy maximizing the immediate single-qubit success probability each round.

    The immediate score of measuring qubit ``k`` with ``E`` is
    ``sum_d max_j p_j Tr[E_d rho_j^(k)]``. Ties go to the lowest flat action id.

    With ``optimal_candidates=True`` each unmeasured qubit also offers its
    optimal measurement under the current posterior (solved exactly), so the
    greedy rule is not limited to ``action_set``; those candidates rank after
    every action-set entry for tie-breaking.
    """
    lik = _Likelihoods(ensemble, action_set)
    per = action_set.per_subsystem
    extra = []

    def choose(mask, post):
        remaining = [k for k in range(ensemble.n) if not mask[k]]
        scores, actions = [], []
        for k in remaining:
            for i in range(per):
                scores.append(np.max(post[:, None] * lik(k, i), axis=0).sum())
                actions.append(Action(i, k))
        if optimal_candidates:
            for k in remaining:
                sol = sdp_min_error(ensemble.subsystem(k), post)
                scores.append(sol.success_probability)
                actions.append(Action(per + len(extra), k))
                extra.append(sol.povm)
        return actions[_pick(scores)]

    return _expand(ensemble, action_set, choose, "greedy", extra)


class _CollectiveCache:
    """Optimal collective success on a subset of qubits for given hypothesis weights."""

    def __init__(self, ensemble):
        self.ensemble = ensemble
        self.final = _FinalRound(ensemble)
        self.joint = {}
        self.values = {}

    def __call__(self, subset, weights):
        subset = tuple(sorted(subset))
        total = float(np.sum(weights))
        if total <= 0.0:
            return 0.0
        if len(subset) == 1:
            return float(self.final(subset[0], weights))
        post = weights / total
        key = (subset, tuple(np.round(post, 12)))
        if key not in self.values:
            if subset not in self.joint:
                self.joint[subset] = np.array([joint_density(s, subset) for s in self.ensemble.states])
            states = self.joint[subset]
            keep = post > 0
            rhos, p = _merge_identical(states[keep], post[keep])
            self.values[key] = sdp_min_error(rhos, p, gap_target=1e-10).success_probability
        return total * self.values[key]


def _merge_identical(states, weights):
    uniq, inverse = np.unique(states.reshape(len(states), -1), axis=0, return_inverse=True)
    inverse = np.ravel(inverse)
    best = np.zeros(len(uniq))
    np.maximum.at(best, inverse, weights)
    return uniq.reshape(-1, *states.shape[1:]), best


def minentropy_local(ensemble, action_set):
    """Policy maximizing the expected optimal collective success of the unmeasured rest.

    Each round scores measuring qubit ``k`` with ``E`` by
    ``sum_d P_coll(remaining minus k | posterior after outcome d)`` weighted by
    the outcome probability, where ``P_coll`` is the optimal collective success
    probability (``2**-H_min``). Ties go to the lowest flat action id.
    """
    lik = _Likelihoods(ensemble, action_set)
    per = action_set.per_subsystem
    coll = _CollectiveCache(ensemble)

    def choose(mask, post):
        remaining = [k for k in range(ensemble.n) if not mask[k]]
        scores, actions = [], []
        for k in remaining:
            rest = [r for r in remaining if r != k]
            for i in range(per):
                L = lik(k, i)
                scores.append(sum(coll(rest, post * L[:, d]) for d in range(L.shape[1])))
                actions.append(Action(i, k))
        return actions[_pick(scores)]

    return _expand(ensemble, action_set, choose, "minentropy")


def enumerate_policies(ensemble, action_set):
    """Yield every deterministic policy over ``action_set`` (tiny instances only)."""
    n = ensemble.n
    lik = _Likelihoods(ensemble, action_set)

    def trees(history, mask):
        remaining = [k for k in range(n) if not mask[k]]
        if len(remaining) <= 1:
            yield {}
            return
        for k in remaining:
            child_mask = mask[:k] + (True,) + mask[k + 1:]
            for i in range(action_set.per_subsystem):
                n_out = lik(k, i).shape[1]
                for subtrees in _product([list(trees(history + (d,), child_mask)) for d in range(n_out)]):
                    merged = {history: Action(i, k)}
                    for sub in subtrees:
                        merged.update(sub)
                    yield merged

    for decisions in trees((), (False,) * n):
        yield AdaptivePolicy(n, action_set, dict(decisions), name="enumerated")


def _product(lists):
    if not lists:
        yield ()
        return
    for head in lists[0]:
        for tail in _product(lists[1:]):
            yield (head,) + tail
