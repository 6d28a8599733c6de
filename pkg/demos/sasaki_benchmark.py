"""Optimal adaptive local measurement on a two-hypothesis benchmark.

Hypothesis 0 is |0> on every qubit, hypothesis 1 is |+> on every qubit, with
prior (0.85, 0.15). The exact dynamic program over the quantized measurement
family recovers 0.85^n, and so does a short PPO run on three qubits.
"""
from adaptive_qsd import build_action_set, dp_optimal_local
from adaptive_qsd.experiments import sasaki_ensemble
from adaptive_qsd.rl import train

print(" n   dynamic program   0.85^n")
for n in range(1, 5):
    value = dp_optimal_local(sasaki_ensemble(n), build_action_set(20, n)).value
    print("%2d   %.8f        %.8f" % (n, value, 0.85 ** n))

result = train(sasaki_ensemble(3), iterations=60, seed=0)
print("\nPPO after 60 iterations on n=3: %.6f" % result.value)
