"""Optimal collective (unrestricted) minimum-error discrimination.

The general solver works on the dual problem

    minimize Tr[Y]  subject to  Y >= q_j rho_j  for every j,

following the log-barrier central path with damped Newton steps. On the path
the matrices ``(Y - q_j rho_j)^{-1} / t`` form an exactly complete POVM whose
duality gap is ``m d / t``. Because those inverses lose precision as ``t``
grows, the final POVM is recovered from complementary slackness: each effect
is re-fit on the numerical null space of ``Y - q_j rho_j``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DimensionError
from .qstate import Povm

GAP_TARGET = 1e-11
GAP_REQUIRED = 1e-6
MAX_NEWTON = 50_000


@dataclass(frozen=True, eq=False)
class DiscriminationSolution:
    povm: Povm
    success_probability: float
    dual_certificate: np.ndarray
    duality_gap: float
    stationarity_residual: float = 0.0
    iterations: int = 0


def _weighted(densities, prior):
    rhos = np.asarray(densities, dtype=float)
    q = np.asarray(prior, dtype=float)
    if rhos.ndim != 3 or rhos.shape[1] != rhos.shape[2]:
        raise DimensionError(f"densities must have shape (m, d, d), got {rhos.shape}")
    if q.shape != (rhos.shape[0],):
        raise DimensionError("prior length must match the number of densities")
    return rhos, q, q[:, None, None] * rhos


def success_probability(povm, densities, prior):
    """``sum_j q_j Tr[Pi_j rho_j]``."""
    _, _, A = _weighted(densities, prior)
    effects = povm.effects if isinstance(povm, Povm) else np.asarray(povm)
    return float(np.einsum("jab,jba->", effects, A))


def _psd_sqrt_pinv(S, rtol=1e-12):
    w, V = np.linalg.eigh(S)
    keep = w > rtol * max(w[-1], 0.0)
    inv_sqrt = (V[:, keep] / np.sqrt(w[keep])) @ V[:, keep].T
    kernel = V[:, ~keep] @ V[:, ~keep].T
    return inv_sqrt, kernel


def _finish(effects, A, Y):
    """Certify a primal/dual pair: shift Y into feasibility and compute the gap."""
    d = Y.shape[0]
    Y = (Y + Y.T) / 2
    slack = min(np.linalg.eigvalsh(Y - a)[0] for a in A)
    if slack < 0:
        Y = Y - slack * np.eye(d)
    p = float(np.einsum("jab,jba->", effects, A))
    resid = np.linalg.norm(Y - np.einsum("jab,jbc->ac", A, effects), 2)
    return p, Y, float(np.trace(Y) - p), float(resid)


def helstrom_binary(rho0, rho1, q0, q1):
    """Closed-form optimum for two hypotheses: ``(1 + ||q0 rho0 - q1 rho1||_1) / 2``."""
    rho0 = np.asarray(rho0, dtype=float)
    rho1 = np.asarray(rho1, dtype=float)
    if rho0.shape != rho1.shape:
        raise DimensionError("states must have equal dimension")
    if abs(q0 + q1 - 1.0) > 1e-12:
        raise ValueError("priors must sum to one")
    gamma = q0 * rho0 - q1 * rho1
    w, V = np.linalg.eigh((gamma + gamma.T) / 2)
    pos = V[:, w > 0]
    pi0 = pos @ pos.T
    pi1 = np.eye(len(w)) - pi0
    A = np.array([q0 * rho0, q1 * rho1])
    Y = (A[0] + A[1] + (V * np.abs(w)) @ V.T) / 2
    effects = np.array([pi0, pi1])
    p, Y, gap, resid = _finish(effects, A, Y)
    return DiscriminationSolution(Povm(effects, "helstrom"), p, Y, gap, resid)


def _barrier_path(A, gap_target, max_newton, mu=60.0):
    m, d, _ = A.shape
    eye = np.eye(d)
    Y = (np.linalg.eigvalsh(A)[:, -1].max() + 1.0) * eye

    def barrier(Yc, t):
        try:
            L = np.linalg.cholesky(Yc - A)
        except np.linalg.LinAlgError:
            return np.inf
        return t * np.trace(Yc) - 2.0 * np.log(np.diagonal(L, axis1=1, axis2=2)).sum()

    # Newton system on the symmetric basis e_a e_b^T + e_b e_a^T, a <= b
    iu = np.triu_indices(d)
    fwd = iu[0] * d + iu[1]
    bwd = iu[1] * d + iu[0]
    t = m * d / float(np.trace(Y))
    steps = 0
    while True:
        final = m * d / t <= gap_target
        f0 = barrier(Y, t)
        for _ in range(60):
            Zinv = np.linalg.inv(Y - A)
            grad = t * eye - Zinv.sum(axis=0)
            H = np.einsum("jab,jcd->acbd", Zinv, Zinv).reshape(d * d, d * d)
            Hs = H[np.ix_(fwd, fwd)] + H[np.ix_(fwd, bwd)] + H[np.ix_(bwd, fwd)] + H[np.ix_(bwd, bwd)]
            gs = grad.ravel()[fwd] + grad.ravel()[bwd]
            x = -np.linalg.solve(Hs, gs)
            step = np.zeros((d, d))
            step[iu] = x
            step = step + step.T
            decrement = -np.sum(grad * step)
            steps += 1
            if decrement < (1e-8 if final else 1e-4) or steps >= max_newton:
                break
            s = 1.0
            while True:
                f1 = barrier(Y + s * step, t)
                if f1 <= f0 - 0.25 * s * decrement or s < 1e-12:
                    break
                s *= 0.5
            if not np.isfinite(f1) or f1 >= f0:
                break
            Y = Y + s * step
            f0 = f1
        if final or steps >= max_newton:
            return Y, t, steps
        t = min(t * mu, m * d / gap_target)


def _slackness_polish(A, Y, t):
    """Re-fit each effect on the near-null space of ``Y - A_j`` to restore completeness."""
    m, d, _ = A.shape
    bases, starts = [], []
    for a in A:
        Z = Y - a
        w, V = np.linalg.eigh(Z)
        Vk = V[:, w < 1e-7 * max(1.0, abs(w).max())]
        bases.append(Vk)
        starts.append(Vk.T @ (np.linalg.inv(Z) / t) @ Vk)
    cols = [np.outer(Vk[:, i], Vk[:, k]).ravel()
            for Vk in bases for i in range(Vk.shape[1]) for k in range(Vk.shape[1])]
    if not cols:
        return None
    M = np.array(cols).T
    x0 = np.concatenate([s.ravel() for s in starts])
    x = x0 + np.linalg.lstsq(M, np.eye(d).ravel() - M @ x0, rcond=None)[0]
    effects, offset = [], 0
    for Vk in bases:
        r = Vk.shape[1]
        X = x[offset:offset + r * r].reshape(r, r)
        offset += r * r
        w, W = np.linalg.eigh((X + X.T) / 2)
        effects.append(Vk @ ((W * np.clip(w, 0.0, None)) @ W.T) @ Vk.T)
    return np.array(effects)


def _complete(effects):
    S = effects.sum(axis=0)
    w, V = np.linalg.eigh(S)
    if w[0] < 0.5:
        return None
    root = (V / np.sqrt(w)) @ V.T
    out = np.einsum("ab,jbc,cd->jad", root, effects, root)
    out = (out + out.transpose(0, 2, 1)) / 2
    if np.max(np.abs(out.sum(axis=0) - np.eye(len(w)))) > 1e-12:
        return None
    return out


def _solve_reduced(A, gap_target, max_newton):
    m, d, _ = A.shape
    if d == 1:
        a = A[:, 0, 0]
        effects = np.zeros((m, 1, 1))
        effects[int(np.argmax(a)), 0, 0] = 1.0
        return effects, np.array([[a.max()]]), 0
    Y, t, steps = _barrier_path(A, gap_target, max_newton)
    candidates = [_complete(np.linalg.inv(Y - A) / t)]
    polished = _slackness_polish(A, Y, t)
    if polished is not None:
        candidates.append(_complete(polished))
    candidates = [c for c in candidates if c is not None and np.all(np.isfinite(c))]
    best = max(candidates, key=lambda c: np.einsum("jab,jba->", c, A))
    return best, Y, steps


def sdp_min_error(densities, prior, *, gap_target=GAP_TARGET, gap_required=GAP_REQUIRED,
                  max_iterations=MAX_NEWTON):
    """Optimal minimum-error measurement and success probability for ``m`` hypotheses.

    Parameters
    ----------
    densities : array_like, shape (m, d, d)
    prior : array_like, shape (m,)
        Nonnegative weights; they need not be normalized (the returned success
        probability then scales accordingly).

    Returns
    -------
    DiscriminationSolution
        Includes the feasible dual certificate ``Y`` and the duality gap
        ``Tr[Y] - P``.

    Raises
    ------
    ConvergenceError
        If the certified gap exceeds ``gap_required``.
    """
    rhos, q, A = _weighted(densities, prior)
    m, d, _ = A.shape
    A = (A + A.transpose(0, 2, 1)) / 2
    scale = float(np.trace(A.sum(axis=0)))
    if scale <= 0:
        raise ValueError("prior has no weight")
    active = np.array([np.trace(a) > 1e-15 * scale for a in A])
    S = A.sum(axis=0)
    w, V = np.linalg.eigh(S)
    keep = w > 1e-13 * w[-1]
    basis = V[:, keep]
    kernel = np.eye(d) - basis @ basis.T
    reduced = np.einsum("ai,jab,bk->jik", basis, A[active], basis) / scale

    if active.sum() == 1:
        sub_effects = np.eye(basis.shape[1])[None]
        sub_Y = reduced[0]
        steps = 0
    else:
        sub_effects, sub_Y, steps = _solve_reduced(reduced, gap_target * 0.1, max_iterations)

    effects = np.zeros((m, d, d))
    effects[active] = np.einsum("ai,jik,bk->jab", basis, sub_effects, basis)
    effects += kernel / m
    effects = (effects + effects.transpose(0, 2, 1)) / 2
    Y = basis @ sub_Y @ basis.T * scale
    p, Y, gap, resid = _finish(effects, A, Y)
    if gap > gap_required * scale or steps >= max_iterations:
        raise ConvergenceError("SDP did not reach the required duality gap", gap)
    return DiscriminationSolution(Povm(effects, "sdp"), p, Y, gap, resid, steps)


def pretty_good_measurement(densities, prior):
    """Square-root measurement ``S^{-1/2} q_j rho_j S^{-1/2}`` with ``S = sum_j q_j rho_j``.

    The kernel of ``S`` is shared equally between all effects.
    """
    _, _, A = _weighted(densities, prior)
    m = A.shape[0]
    inv_sqrt, kernel = _psd_sqrt_pinv(A.sum(axis=0))
    effects = np.einsum("ab,jbc,cd->jad", inv_sqrt, A, inv_sqrt) + kernel / m
    return Povm((effects + effects.transpose(0, 2, 1)) / 2, "pgm")


def min_entropy(densities, prior, **kwargs):
    """Min-entropy in bits, ``-log2`` of the optimal guessing probability."""
    p = sdp_min_error(densities, prior, **kwargs).success_probability
    return max(0.0, -float(np.log2(p)))


_TRIPLES = {}


def _triples(m):
    if m not in _TRIPLES:
        combos = np.array(list(itertools.combinations(range(m), 3)), dtype=int).reshape(-1, 3)
        _TRIPLES[m] = combos
    return _TRIPLES[m]


def qubit_success(weighted):
    """Exact optimal success probability for real qubit hypotheses, batched.

    ``weighted[..., j, :, :]`` is ``q_j rho_j`` (weights need not sum to one).
    Writes ``q_j rho_j = a_j I + b_j . (Z, X)`` and minimizes the dual objective
    ``2 max_j (a_j + |y - b_j|)`` over ``y`` in the plane; the minimizer has
    one, two or three active constraints, so enumerating apexes, pairwise
    segment points and additively weighted circumcentres is exhaustive.
    """
    A = np.asarray(weighted, dtype=float)
    a = (A[..., 0, 0] + A[..., 1, 1]) / 2
    b = np.stack([(A[..., 0, 0] - A[..., 1, 1]) / 2, (A[..., 0, 1] + A[..., 1, 0]) / 2], axis=-1)
    m = a.shape[-1]
    cands = [b]
    if m >= 2:
        I, J = np.triu_indices(m, 1)
        diff = b[..., J, :] - b[..., I, :]
        D = np.linalg.norm(diff, axis=-1)
        safe = np.where(D > 0, D, 1.0)
        t = np.clip((a[..., J] - a[..., I] + D) / 2, 0.0, D)
        cands.append(b[..., I, :] + (t / safe)[..., None] * diff)
    if m >= 3:
        T = _triples(m)
        bi, bj, bk = (b[..., T[:, c], :] for c in range(3))
        ai, aj, ak = (a[..., T[:, c]] for c in range(3))
        r1, r2 = 2 * (bj - bi), 2 * (bk - bi)
        e1, e2 = 2 * (aj - ai), 2 * (ak - ai)
        nb = lambda v: np.sum(v * v, axis=-1)  # noqa: E731
        c1 = nb(bj) - nb(bi) - aj**2 + ai**2
        c2 = nb(bk) - nb(bi) - ak**2 + ai**2
        det = r1[..., 0] * r2[..., 1] - r1[..., 1] * r2[..., 0]
        ok = np.abs(det) > 1e-14
        det = np.where(ok, det, 1.0)

        def solve2(u1, u2):
            return np.stack([(r2[..., 1] * u1 - r1[..., 1] * u2) / det,
                             (-r2[..., 0] * u1 + r1[..., 0] * u2) / det], axis=-1)

        y0 = solve2(c1, c2)
        wv = solve2(e1, e2)
        h = y0 - bi
        alpha = nb(wv) - 1.0
        beta = 2 * (np.sum(h * wv, axis=-1) + ai)
        gamma = nb(h) - ai**2
        disc = np.sqrt(np.clip(beta**2 - 4 * alpha * gamma, 0.0, None))
        lin = np.abs(alpha) < 1e-14
        alpha_safe = np.where(lin, 1.0, alpha)
        beta_safe = np.where(beta == 0, 1.0, beta)
        for sign in (1.0, -1.0):
            v = np.where(lin, -gamma / beta_safe, (-beta + sign * disc) / (2 * alpha_safe))
            y = y0 + v[..., None] * wv
            y = np.where(ok[..., None], y, bi)
            cands.append(y)
    Ycand = np.concatenate(cands, axis=-2)
    dist = np.linalg.norm(Ycand[..., :, None, :] - b[..., None, :, :], axis=-1)
    f = np.max(a[..., None, :] + dist, axis=-1)
    return 2.0 * np.min(f, axis=-1)


def qubit_min_error(densities, prior):
    """Scalar convenience wrapper around :func:`qubit_success`."""
    _, _, A = _weighted(densities, prior)
    if A.shape[1:] != (2, 2):
        raise DimensionError("qubit_min_error expects 2x2 states")
    return float(qubit_success(A))
