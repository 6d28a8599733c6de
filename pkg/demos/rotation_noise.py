"""How a fixed measurement tree degrades when every state is slightly rotated.

The tree is optimized for the noiseless ensemble, then replayed on states
rotated by a common angle theta. The loss in success probability stays below
sqrt(2) n |theta|.
"""
from adaptive_qsd import build_action_set, dp_optimal_local
from adaptive_qsd.experiments import THETA_GRID, TrialSpec, generate_ensemble, noise_sweep

ens = generate_ensemble(TrialSpec(m=3, n=3, pure=False, seed=0))
policy = dp_optimal_local(ens, build_action_set(20, ens.n))
result = noise_sweep(ens, policy, THETA_GRID)

print(" theta    success    loss        bound")
for r in result.records:
    print("%6.3f   %.6f   %+.2e   %.2e" % (r.theta, r.p_perturbed, r.diff, r.bound))
print("violations:", len(result.violations))
