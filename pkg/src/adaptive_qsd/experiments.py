"""Seeded experiment protocols: random ensembles, solver comparisons, noise sweeps."""
from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import trine
from .actions import DEFAULT_Q, Action, build_action_set
from .collective import sdp_min_error
from .errors import BoundViolation
from .local import AdaptivePolicy, dp_optimal_local, evaluate_policy, locally_greedy, minentropy_local
from .qstate import Ensemble, depolarize, joint_density, pure_state, rotation

SOLVERS = ("sdp", "dp", "greedy", "minentropy", "rl")
CSV_COLUMNS = ("trial", "seed", "m", "n", "p_sdp", "p_dp", "p_greedy", "p_minentropy",
               "p_rlnn_mean", "p_rlnn_std")
THETA_GRID = (0.001, 0.005, 0.01, 0.05, 0.075, 0.1)
DP_MAX_N = 4
MINENTROPY_MAX_N = 5
VALUE_TOL = 1e-9


@dataclass
class TrialSpec:
    """Parameters of one random-ensemble trial (or a batch, via ``trials``).

    ``ppo`` holds PpoConfig overrides for the RL solver.
    """

    m: int = 2
    n: int = 3
    Q: int = DEFAULT_Q
    pure: bool = True
    noise_range: tuple = (0.0, 0.5)
    seed: int = 0
    solvers: tuple = SOLVERS
    iterations: int = 1000
    rl_repeats: int = 5
    trials: int = 1
    prior: tuple | None = None
    ppo: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["noise_range"] = list(self.noise_range)
        d["solvers"] = list(self.solvers)
        d["prior"] = None if self.prior is None else list(self.prior)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["noise_range"] = tuple(d.get("noise_range", (0.0, 0.5)))
        d["solvers"] = tuple(d.get("solvers", SOLVERS))
        if d.get("prior") is not None:
            d["prior"] = tuple(d["prior"])
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def generate_ensemble(spec):
    """Random real product ensemble; factors are depolarized unless ``spec.pure``.

    Each factor starts as the pure state at an angle drawn uniformly from
    ``[0, pi)``; with ``pure=False`` every factor then receives its own
    depolarizing strength drawn uniformly from ``spec.noise_range``.
    """
    rng = np.random.default_rng(spec.seed)
    phis = rng.uniform(0.0, np.pi, size=(spec.m, spec.n))
    factors = np.array([[pure_state(phi) for phi in row] for row in phis])
    meta = {"seed": spec.seed, "pure": spec.pure, "phi": phis.tolist()}
    if not spec.pure:
        lo, hi = spec.noise_range
        ps = rng.uniform(lo, hi, size=(spec.m, spec.n))
        factors = depolarize(factors, ps[..., None, None])
        meta.update(noise_range=list(spec.noise_range), noise=ps.tolist())
    prior = None if spec.prior is None else np.asarray(spec.prior, dtype=float)
    return Ensemble.from_factors(factors, prior, meta)


def sasaki_ensemble(n, p=0.85):
    """All ``2**n`` products of ``diag(p, 1-p)`` and ``diag(1-p, p)``, uniform prior."""
    pair = (np.diag([p, 1 - p]), np.diag([1 - p, p]))
    factors = [[pair[b] for b in bits] for bits in itertools.product((0, 1), repeat=n)]
    return Ensemble.from_factors(factors, meta={"name": "sasaki", "p": p})


def ensemble_to_dict(ens):
    return {
        "m": ens.m,
        "n": ens.n,
        "prior": [float(q) for q in ens.prior],
        "states": ens.states.tolist(),
        "meta": dict(ens.meta or {}),
    }


def ensemble_from_dict(d):
    states = np.asarray(d["states"], dtype=float)
    if states.shape[:2] != (d["m"], d["n"]):
        raise ValueError(f"states shape {states.shape} disagrees with m={d['m']}, n={d['n']}")
    return Ensemble(states, np.asarray(d["prior"], dtype=float), d.get("meta") or {})


def save_ensemble(path, ens):
    with open(path, "w") as fh:
        json.dump(ensemble_to_dict(ens), fh)
        fh.write("\n")


def load_ensemble(path):
    with open(path) as fh:
        return ensemble_from_dict(json.load(fh))


def apply_rotation_noise(ensemble, theta):
    """Conjugate every factor by the real rotation ``U(theta)``."""
    U = rotation(theta)
    states = U @ ensemble.states @ U.T
    meta = dict(ensemble.meta or {}, rotation=float(theta))
    return Ensemble(states, ensemble.prior, meta)


@dataclass
class NoiseRecord:
    theta: float
    p_original: float
    p_perturbed: float
    diff: float
    bound: float
    bound_linear: float


@dataclass
class NoiseSweepResult:
    n: int
    records: list = field(default_factory=list)

    @property
    def violations(self):
        return [r for r in self.records if abs(r.diff) > r.bound]

    def to_dict(self):
        return {"n": self.n, "records": [asdict(r) for r in self.records]}


def noise_sweep(ensemble, policy, thetas=THETA_GRID, check=True):
    """Evaluate a fixed policy on rotated copies of ``ensemble``.

    ``diff = P(original) - P(rotated)``. Each record carries the bound
    ``sqrt(2) n |theta|`` that is enforced, and the tighter ``n |theta|`` for
    reference only.

    Raises
    ------
    BoundViolation
        If ``check`` and some ``|diff|`` exceeds ``sqrt(2) n |theta|``.
    """
    base = evaluate_policy(ensemble, policy)
    result = NoiseSweepResult(ensemble.n)
    for theta in thetas:
        if theta == 0:
            perturbed = base
        else:
            perturbed = evaluate_policy(apply_rotation_noise(ensemble, theta), policy)
        result.records.append(NoiseRecord(
            float(theta), base, perturbed, base - perturbed,
            math.sqrt(2) * ensemble.n * abs(theta), float(ensemble.n * abs(theta))))
    if check and result.violations:
        r = result.violations[0]
        raise BoundViolation(f"|diff({r.theta})| = {abs(r.diff):.3g} exceeds {r.bound:.3g}")
    return result


def collective_value(ensemble):
    joint = np.array([joint_density(s, range(ensemble.n)) for s in ensemble.states])
    return sdp_min_error(joint, ensemble.prior).success_probability


def local_policy(ensemble, solver, Q=DEFAULT_Q):
    """Policy from a classical local solver: ``dp``, ``greedy`` or ``minentropy``."""
    action_set = build_action_set(Q, ensemble.n)
    builders = {"dp": dp_optimal_local, "greedy": locally_greedy, "minentropy": minentropy_local}
    if solver not in builders:
        raise ValueError(f"unknown local solver {solver!r}")
    return builders[solver](ensemble, action_set)


def _rl_values(ensemble, spec, seed):
    from .rl.ppo import PpoConfig, train

    config = PpoConfig(**spec.ppo)
    values = [train(ensemble, config, iterations=spec.iterations, seed=seed * 1000 + r, Q=spec.Q).value
              for r in range(spec.rl_repeats)]
    return float(np.mean(values)), float(np.std(values))


def run_trial(spec, trial, dp_max_n=DP_MAX_N):
    """One row of the comparison table; solver failures become NaN plus an error note."""
    seed = spec.seed + trial
    ens = generate_ensemble(TrialSpec.from_dict(dict(spec.to_dict(), seed=seed)))
    row = {"trial": trial, "seed": seed, "m": spec.m, "n": spec.n}
    row.update({c: math.nan for c in CSV_COLUMNS[4:]})
    errors = {}

    def attempt(name, fn):
        try:
            fn()
        except Exception as exc:  # recorded per cell; the run continues
            errors[name] = f"{type(exc).__name__}: {exc}"

    if "sdp" in spec.solvers:
        attempt("sdp", lambda: row.update(p_sdp=collective_value(ens)))
    if "dp" in spec.solvers and spec.n <= dp_max_n:
        attempt("dp", lambda: row.update(p_dp=local_policy(ens, "dp", spec.Q).value))
    if "greedy" in spec.solvers:
        attempt("greedy", lambda: row.update(p_greedy=local_policy(ens, "greedy", spec.Q).value))
    if "minentropy" in spec.solvers and spec.n <= MINENTROPY_MAX_N:
        attempt("minentropy", lambda: row.update(p_minentropy=local_policy(ens, "minentropy", spec.Q).value))
    if "rl" in spec.solvers and spec.rl_repeats > 0:
        def rl():
            row["p_rlnn_mean"], row["p_rlnn_std"] = _rl_values(ens, spec, seed)
        attempt("rl", rl)
    if errors:
        row["errors"] = errors
    return row


def check_row(row, prior_max):
    """Raise BoundViolation if a row breaks the value range or dominance invariants."""
    present = {k: row[k] for k in ("p_sdp", "p_dp", "p_greedy", "p_minentropy", "p_rlnn_mean")
               if not math.isnan(row[k])}
    for k, v in present.items():
        if not prior_max - VALUE_TOL <= v <= 1 + VALUE_TOL:
            raise BoundViolation(f"trial {row['trial']}: {k}={v} outside [{prior_max}, 1]")
    if "p_dp" in present and "p_greedy" in present and present["p_greedy"] > present["p_dp"] + VALUE_TOL:
        raise BoundViolation(f"trial {row['trial']}: greedy exceeds DP")
    if "p_dp" in present and "p_sdp" in present and present["p_dp"] > present["p_sdp"] + VALUE_TOL:
        raise BoundViolation(f"trial {row['trial']}: DP exceeds the collective optimum")


def run_comparison(spec, dp_max_n=DP_MAX_N, check=True):
    """Rows for ``spec.trials`` seeded trials, sorted by increasing collective success."""
    rows = [run_trial(spec, t, dp_max_n) for t in range(spec.trials)]
    if check:
        for row in rows:
            prior_max = max(spec.prior) if spec.prior else 1.0 / spec.m
            check_row(row, prior_max)
    return sorted(rows, key=lambda r: (r["p_sdp"] if not math.isnan(r["p_sdp"]) else math.inf, r["trial"]))


def write_csv(rows, fh):
    writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})


def trine_demo():
    """Collective, anti-trine-first, greedy and two-outcome-curve values for two trine copies."""
    ens = trine.trine_ensemble(2)
    joint = np.array([joint_density(s, (0, 1)) for s in ens.states])
    coll = sdp_min_error(joint, ens.prior)
    binary = build_action_set(DEFAULT_Q, 2)
    with_anti = binary.with_extras(trine.anti_trine_povm())
    anti_first = _anti_trine_first_value(ens, with_anti)
    greedy = locally_greedy(ens, binary, optimal_candidates=True).value
    theta, curve_max = trine.maximize_two_element_curve()
    return {
        "p_collective": float(coll.success_probability),
        "duality_gap": float(coll.duality_gap),
        "p_anti_trine_first": anti_first,
        "p_greedy": greedy,
        "curve_argmax": theta,
        "curve_max": curve_max,
        "local_below_collective": bool(max(anti_first, greedy, curve_max) < coll.success_probability),
        "expected": {
            "p_collective": float(trine.COLLECTIVE_TWO_COPY),
            "p_anti_trine_first": float(trine.ANTI_TRINE_FIRST),
            "p_greedy": float(trine.GREEDY_TWO_COPY),
        },
    }


def _anti_trine_first_value(ens, action_set):
    anti = action_set.per_subsystem - 1
    policy = AdaptivePolicy(2, action_set, {(): Action(anti, 0)}, name="anti-trine-first")
    return evaluate_policy(ens, policy)
