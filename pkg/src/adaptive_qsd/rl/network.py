"""Policy/value MLPs with hand-written backpropagation, and Adam."""
from __future__ import annotations

import numpy as np


def normc(rng, fan_in, fan_out, scale):
    """Gaussian columns rescaled to norm ``scale``."""
    w = rng.standard_normal((fan_in, fan_out))
    return w * scale / np.sqrt(np.sum(w * w, axis=0, keepdims=True))


class Mlp:
    """Fully connected tanh network with a linear output layer."""

    def __init__(self, sizes, rng, out_scale=1.0):
        self.sizes = tuple(sizes)
        self.params = []
        for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
            scale = out_scale if i == len(sizes) - 2 else 1.0
            self.params += [normc(rng, a, b, scale), np.zeros(b)]

    def forward(self, x):
        acts = [x]
        h = x
        n_layers = len(self.params) // 2
        for i in range(n_layers):
            W, b = self.params[2 * i], self.params[2 * i + 1]
            h = h @ W + b
            if i < n_layers - 1:
                h = np.tanh(h)
            acts.append(h)
        return h, acts

    def backward(self, acts, grad_out):
        """Gradients of ``sum(grad_out * output)`` with respect to every parameter."""
        grads = [None] * len(self.params)
        g = grad_out
        n_layers = len(self.params) // 2
        for i in reversed(range(n_layers)):
            W = self.params[2 * i]
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            if i > 0:
                g = (g @ W.T) * (1.0 - acts[i] ** 2)
        return grads


class PolicyValueNet:
    """Two separate MLPs sharing an input: action logits and a scalar state value."""

    def __init__(self, n_inputs, n_actions, rng, hidden=(256, 256)):
        self.n_inputs = n_inputs
        self.n_actions = n_actions
        self.hidden = tuple(hidden)
        self.policy = Mlp((n_inputs, *hidden, n_actions), rng, out_scale=0.01)
        self.value = Mlp((n_inputs, *hidden, 1), rng, out_scale=1.0)

    @property
    def params(self):
        return self.policy.params + self.value.params

    def set_params(self, params):
        k = len(self.policy.params)
        self.policy.params = [np.array(p, dtype=float) for p in params[:k]]
        self.value.params = [np.array(p, dtype=float) for p in params[k:]]

    def flat(self):
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat(self, vec):
        out, i = [], 0
        for p in self.params:
            out.append(np.asarray(vec[i:i + p.size]).reshape(p.shape))
            i += p.size
        self.set_params(out)

    def logits(self, obs):
        return self.policy.forward(np.atleast_2d(obs))[0]

    def state_value(self, obs):
        return self.value.forward(np.atleast_2d(obs))[0][:, 0]

    def action_probs(self, obs):
        return softmax(self.logits(obs))


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        """Descent step in place on ``params``."""
        self.t += 1
        c1 = 1 - self.beta1 ** self.t
        c2 = 1 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
