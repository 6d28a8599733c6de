"""Train a PPO agent to choose adaptive measurements, then save and reload it.

The agent sees which qubits are already measured plus the current posterior,
and picks the next (qubit, angle) pair. Its greedy policy is scored exactly.
"""
import sys
import tempfile
from pathlib import Path

from adaptive_qsd import evaluate_policy
from adaptive_qsd.experiments import TrialSpec, collective_value, generate_ensemble, local_policy
from adaptive_qsd.rl import greedy_policy, load_checkpoint, save_checkpoint, train

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 200
ens = generate_ensemble(TrialSpec(m=2, n=3, pure=True, seed=0))

result = train(ens, iterations=iterations, seed=0, eval_every=max(iterations // 5, 1))
for it, value in result.evaluations:
    print("iteration %4d   greedy policy %.6f" % (it, value))

print("\ncollective      %.6f" % collective_value(ens))
print("dynamic program %.6f" % local_policy(ens, "dp").value)
print("PPO             %.6f" % result.value)

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "agent.bin"
    save_checkpoint(path, result.net, ens.n, ens.m, result.Q)
    net, header = load_checkpoint(path)
    print("reloaded policy %.6f" % evaluate_policy(ens, greedy_policy(net, ens, header["Q"])))
