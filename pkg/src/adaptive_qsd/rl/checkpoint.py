"""Network checkpoints: one JSON header line, then little-endian float64 parameters.

The header records the format version, observation widths ``n`` and ``m``,
``Q``, the layer sizes of both networks and each array's shape. Parameters
follow in network order (policy then value, weight then bias per layer),
each stored row-major.
"""
from __future__ import annotations

import json

import numpy as np

from .network import PolicyValueNet

MAGIC = "adaptive-qsd-net"
VERSION = 1


def save_checkpoint(path, net, n, m, Q, extra=None):
    header = {
        "format": MAGIC,
        "version": VERSION,
        "n": n,
        "m": m,
        "Q": Q,
        "policy_layers": list(net.policy.sizes),
        "value_layers": list(net.value.sizes),
        "shapes": [list(p.shape) for p in net.params],
        "extra": extra or {},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode() + b"\n")
        for p in net.params:
            fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns ``(net, header)``."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        body = fh.read()
    if header.get("format") != MAGIC:
        raise ValueError(f"{path} is not a network checkpoint")
    if header.get("version") != VERSION:
        raise ValueError(f"unsupported checkpoint version {header.get('version')}")
    sizes = header["policy_layers"]
    net = PolicyValueNet(sizes[0], sizes[-1], np.random.default_rng(0), tuple(sizes[1:-1]))
    flat = np.frombuffer(body, dtype="<f8")
    expected = sum(int(np.prod(s)) for s in header["shapes"])
    if flat.size != expected:
        raise ValueError(f"checkpoint holds {flat.size} values, header expects {expected}")
    net.set_flat(flat.astype(float))
    return net, header
