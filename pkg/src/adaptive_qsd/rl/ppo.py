"""Proximal policy optimization for the measurement environment, in plain numpy."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..actions import Action, build_action_set
from ..errors import NumericsError
from ..local import AdaptivePolicy, _FinalRound, evaluate_policy
from ..qstate import likelihoods
from .env import REMEASURE_PENALTY, BatchRollout
from .network import Adam, PolicyValueNet, log_softmax


@dataclass
class PpoConfig:
    clip: float = 0.3
    gamma: float = 0.99
    lr: float = 5e-5
    episodes_per_iteration: int = 512
    epochs: int = 4
    minibatch_size: int = 128
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    normalize_advantages: bool = True
    hidden: tuple = (256, 256)
    penalty: float = REMEASURE_PENALTY
    max_steps_factor: int = 4

    def to_dict(self):
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "hidden" in d:
            d["hidden"] = tuple(d["hidden"])
        return cls(**d)


def compute_advantages(trajectory, gamma):
    """Discounted Monte-Carlo returns and ``return - value`` advantages."""
    rewards = trajectory.rewards
    returns = np.zeros(len(rewards))
    acc = 0.0
    for t in reversed(range(len(rewards))):
        acc = rewards[t] + gamma * acc
        returns[t] = acc
    return returns - trajectory.values, returns


def ppo_loss(net, batch, config):
    """Clipped-surrogate loss and its gradient for every network parameter.

    ``batch`` holds ``obs``, ``actions``, ``log_probs`` (behaviour policy),
    ``advantages`` and ``returns``. Returns ``(loss, grads, info)``.
    """
    obs, act = batch["obs"], batch["actions"]
    adv, ret = batch["advantages"], batch["returns"]
    B = len(act)
    logits, p_cache = net.policy.forward(obs)
    logp_all = log_softmax(logits)
    probs = np.exp(logp_all)
    logp = logp_all[np.arange(B), act]
    ratio = np.exp(logp - batch["log_probs"])
    clipped = np.clip(ratio, 1 - config.clip, 1 + config.clip)
    surr = np.minimum(ratio * adv, clipped * adv)
    entropy = -(probs * logp_all).sum(axis=1)
    values, v_cache = net.value.forward(obs)
    values = values[:, 0]
    policy_loss = -surr.mean()
    value_loss = np.mean((values - ret) ** 2)
    loss = policy_loss - config.entropy_coef * entropy.mean() + config.value_coef * value_loss

    active = ratio * adv <= clipped * adv
    g_logp = np.where(active, ratio * adv, 0.0)
    onehot = np.zeros_like(logits)
    onehot[np.arange(B), act] = 1.0
    g_logits = -(g_logp[:, None] * (onehot - probs)) / B
    g_logits += config.entropy_coef * probs * (logp_all + entropy[:, None]) / B
    g_values = config.value_coef * 2.0 * (values - ret)[:, None] / B
    grads = net.policy.backward(p_cache, g_logits) + net.value.backward(v_cache, g_values)
    info = {
        "policy_loss": float(policy_loss),
        "value_loss": float(value_loss),
        "entropy": float(entropy.mean()),
        "clip_fraction": float(np.mean(np.abs(ratio - 1) > config.clip)),
    }
    return float(loss), grads, info


def collate(trajectories, config):
    """Flatten trajectories into one training batch."""
    adv, ret = zip(*(compute_advantages(t, config.gamma) for t in trajectories))
    batch = {
        "obs": np.concatenate([t.observations for t in trajectories]),
        "actions": np.concatenate([t.actions for t in trajectories]).astype(int),
        "log_probs": np.concatenate([t.log_probs for t in trajectories]),
        "advantages": np.concatenate(adv),
        "returns": np.concatenate(ret),
    }
    if config.normalize_advantages and len(batch["advantages"]) > 1:
        a = batch["advantages"]
        batch["advantages"] = (a - a.mean()) / (a.std() + 1e-8)
    return batch


def ppo_update(net, batch, config, optimizer, rng):
    """Several epochs of minibatch Adam steps on the clipped objective."""
    size = len(batch["actions"])
    infos = []
    for _ in range(config.epochs):
        order = rng.permutation(size)
        for start in range(0, size, config.minibatch_size):
            idx = order[start:start + config.minibatch_size]
            mb = {k: v[idx] for k, v in batch.items()}
            loss, grads, info = ppo_loss(net, mb, config)
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
                raise NumericsError("non-finite loss or gradient in PPO update")
            optimizer.step(net.params, grads)
            infos.append(info)
    return {k: float(np.mean([i[k] for i in infos])) for k in infos[0]} if infos else {}


def greedy_policy(net, ensemble, Q):
    """Deterministic policy read off the network's action distribution.

    At each node the qubit is the unmeasured one with the largest total
    probability, and the angle is the most probable one on that qubit. Taking
    the qubit first keeps probability spread over many nearly equivalent angles
    from losing to a single sharper action on a worse qubit.
    """
    n = ensemble.n
    action_set = build_action_set(Q, n)
    policy = AdaptivePolicy(n, action_set, name="rl")

    def grow(history, mask, post):
        if sum(mask) >= n - 1:
            return
        obs = np.concatenate([np.asarray(mask, dtype=float), post])
        probs = np.exp(log_softmax(net.logits(obs))[0]).reshape(n, Q)
        probs[np.asarray(mask)] = -1.0
        k = int(np.argmax(probs.sum(axis=1)))
        i = int(np.argmax(probs[k]))
        policy.decisions[history] = Action(int(i), int(k))
        L = likelihoods(ensemble.subsystem(k), action_set.povms[i])
        child = mask[:k] + (True,) + mask[k + 1:]
        for d in range(L.shape[1]):
            w = post * L[:, d]
            if w.sum() > 0:
                grow(history + (d,), child, w / w.sum())

    grow((), (False,) * n, np.asarray(ensemble.prior, dtype=float))
    return policy


@dataclass
class TrainResult:
    net: PolicyValueNet
    policy: AdaptivePolicy
    value: float
    mean_rewards: list = field(default_factory=list)
    evaluations: list = field(default_factory=list)  # (iteration, exact greedy value)
    config: PpoConfig = None
    Q: int = 20


def train(ensemble, config=None, iterations=1000, seed=0, Q=20, eval_every=0, log=None):
    """Train a policy/value network with PPO and extract its greedy policy.

    Parameters
    ----------
    eval_every : int
        When positive, the exact value of the greedy policy is recorded every
        ``eval_every`` iterations (and after the last one).
    log : callable, optional
        Called as ``log(iteration, mean_reward, info)``.
    """
    config = config or PpoConfig()
    rng = np.random.default_rng(seed)
    n = ensemble.n
    net = PolicyValueNet(n + ensemble.m, n * Q, rng, config.hidden)
    opt = Adam(net.params, config.lr)
    roll = BatchRollout(ensemble, Q, config.penalty, config.max_steps_factor)
    final = _FinalRound(ensemble)
    result = TrainResult(net, None, float("nan"), config=config, Q=Q)

    def policy_fn(obs):
        logits, values = net.logits(obs), net.state_value(obs)
        return np.exp(log_softmax(logits)), values

    for it in range(1, iterations + 1):
        trajs = roll.run(policy_fn, config.episodes_per_iteration, rng)
        mean_reward = float(np.mean([t.total_reward for t in trajs]))
        result.mean_rewards.append(mean_reward)
        info = ppo_update(net, collate(trajs, config), config, opt, rng)
        if eval_every and (it % eval_every == 0 or it == iterations):
            value = evaluate_policy(ensemble, greedy_policy(net, ensemble, Q), final)
            result.evaluations.append((it, value))
        if log:
            log(it, mean_reward, info)

    result.policy = greedy_policy(net, ensemble, Q)
    result.value = evaluate_policy(ensemble, result.policy, final)
    result.policy.value = result.value
    return result
