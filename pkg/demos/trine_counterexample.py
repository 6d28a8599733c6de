"""Two copies of the trine: where adaptive local measurement falls short.

Three qubit states 120 degrees apart are each prepared twice. A joint
measurement on both copies beats every one-qubit-at-a-time strategy we try.
"""
import math

from adaptive_qsd.experiments import trine_demo
from adaptive_qsd.trine import trine_two_element_curve

report = trine_demo()

print("collective (joint) measurement   %.6f" % report["p_collective"])
print("  duality gap of the certificate %.1e" % report["duality_gap"])
print("anti-trine on copy 1, then best  %.6f" % report["p_anti_trine_first"])
print("greedy, one copy at a time       %.6f" % report["p_greedy"])

# A two-outcome measurement on the first copy, swept over its angle.
print("\nbest two-outcome first measurement")
for frac in (0.55, 0.6, 2 / 3, 0.75, 0.8):
    theta = frac * math.pi
    print("  theta = %.3f pi  ->  %.6f" % (frac, trine_two_element_curve(theta)))
print("  maximum %.6f at theta = %.4f pi" % (report["curve_max"], report["curve_argmax"] / math.pi))

print("\nevery local strategy below the collective value:", report["local_below_collective"])
