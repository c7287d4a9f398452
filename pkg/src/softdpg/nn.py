"""Small dense networks with hand-written reverse-mode gradients.

Everything is float64 numpy. A network is a list of affine layers with a
shared hidden activation (relu or tanh) and either a linear output head or a
bounded head scale * tanh(z). backward contracts the exact Jacobian with a
caller-supplied upstream cotangent, so any batch averaging lives in the
upstream, not here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Mlp",
    "AdamState",
    "init_mlp",
    "forward",
    "backward",
    "adam_step",
    "polyak_update",
    "mlp_to_dict",
    "mlp_from_dict",
    "save_checkpoint",
    "load_checkpoint",
]

_HIDDEN = ("relu", "tanh")
_HEADS = ("linear", "bounded")


@dataclass
class Mlp:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]  # each (n_in, n_out)
    biases: list[np.ndarray]  # each (n_out,)
    hidden_activation: str = "tanh"
    output_head: str = "linear"
    head_scale: float = 1.0

    def params(self) -> list[np.ndarray]:
        """Flat parameter list [W0, b0, W1, b1, ...] (views, not copies)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy(self) -> "Mlp":
        return Mlp(
            layer_sizes=self.layer_sizes,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            hidden_activation=self.hidden_activation,
            output_head=self.output_head,
            head_scale=self.head_scale,
        )


def init_mlp(
    layer_sizes,
    rng,
    hidden_activation: str = "tanh",
    output_head: str = "linear",
    head_scale: float = 1.0,
) -> Mlp:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init for weights and biases."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ValueError(f"layer_sizes needs >= 2 positive entries, got {sizes}")
    if hidden_activation not in _HIDDEN:
        raise ValueError(f"hidden_activation must be one of {_HIDDEN}")
    if output_head not in _HEADS:
        raise ValueError(f"output_head must be one of {_HEADS}")
    if output_head == "bounded" and not head_scale > 0.0:
        raise ValueError("bounded head needs head_scale > 0")
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(n_in)
        weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
        biases.append(rng.uniform(-bound, bound, size=n_out))
    return Mlp(sizes, weights, biases, hidden_activation, output_head, head_scale)


def _forward_cached(net: Mlp, x: np.ndarray):
    """Forward pass keeping pre-activations for the backward sweep."""
    h = x
    pre = []
    hidden = [x]
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        pre.append(z)
        if i < last:
            h = np.maximum(z, 0.0) if net.hidden_activation == "relu" else np.tanh(z)
            hidden.append(h)
        else:
            h = net.head_scale * np.tanh(z) if net.output_head == "bounded" else z
    return h, pre, hidden


def forward(net: Mlp, x) -> np.ndarray:
    """Evaluate the network on x of shape (d,) or (batch, d)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    out, _, _ = _forward_cached(net, x[None, :] if single else x)
    return out[0] if single else out


def backward(net: Mlp, x, upstream):
    """Exact cotangent contraction through the network.

    upstream has the output's batch shape (or is a scalar, broadcast over
    it). Returns (param_grads, input_grad) where param_grads is a flat list
    matching net.params() with gradients summed over the batch, and
    input_grad has x's shape. ReLU uses subgradient 0 at 0.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    out, pre, hidden = _forward_cached(net, xb)
    g = np.broadcast_to(np.asarray(upstream, dtype=float), out.shape).astype(float)

    last = len(net.weights) - 1
    if net.output_head == "bounded":
        g = g * net.head_scale * (1.0 - np.tanh(pre[last]) ** 2)
    param_grads: list[np.ndarray | None] = [None] * (2 * len(net.weights))
    for i in range(last, -1, -1):
        param_grads[2 * i] = hidden[i].T @ g
        param_grads[2 * i + 1] = g.sum(axis=0)
        g = g @ net.weights[i].T
        if i > 0:
            z = pre[i - 1]
            if net.hidden_activation == "relu":
                g = g * (z > 0.0)
            else:
                g = g * (1.0 - np.tanh(z) ** 2)
    input_grad = g[0] if single else g
    return param_grads, input_grad


@dataclass
class AdamState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], st: AdamState):
    """One bias-corrected Adam update, in place. Non-finite grads are fatal."""
    if len(params) != len(grads):
        raise ValueError("params and grads must be parallel lists")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient in adam_step")
    if not st.m:
        st.m = [np.zeros_like(p) for p in params]
        st.v = [np.zeros_like(p) for p in params]
    st.step += 1
    c1 = 1.0 - st.beta1**st.step
    c2 = 1.0 - st.beta2**st.step
    for p, g, m, v in zip(params, grads, st.m, st.v):
        m *= st.beta1
        m += (1.0 - st.beta1) * g
        v *= st.beta2
        v += (1.0 - st.beta2) * g * g
        p -= st.lr * (m / c1) / (np.sqrt(v / c2) + st.eps)
    return params, st


def polyak_update(target: Mlp, online: Mlp, tau: float):
    """target <- (1 - tau) * target + tau * online, in place."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    for pt, po in zip(target.params(), online.params()):
        pt *= 1.0 - tau
        pt += tau * po


def mlp_to_dict(net: Mlp) -> dict:
    return {
        "layer_sizes": list(net.layer_sizes),
        "activations": {
            "hidden": net.hidden_activation,
            "output": net.output_head,
            "scale": net.head_scale,
        },
        "layers": [
            {"weight": w.tolist(), "bias": b.tolist()}
            for w, b in zip(net.weights, net.biases)
        ],
    }


def mlp_from_dict(data: dict) -> Mlp:
    sizes = tuple(int(s) for s in data["layer_sizes"])
    act = data["activations"]
    weights = [np.asarray(layer["weight"], dtype=float) for layer in data["layers"]]
    biases = [np.asarray(layer["bias"], dtype=float) for layer in data["layers"]]
    for i, (w, b) in enumerate(zip(weights, biases)):
        if w.shape != (sizes[i], sizes[i + 1]) or b.shape != (sizes[i + 1],):
            raise ValueError(f"layer {i} shape mismatch against layer_sizes {sizes}")
    return Mlp(sizes, weights, biases, act["hidden"], act["output"], float(act["scale"]))


def save_checkpoint(path, payload: dict):
    """Write a JSON checkpoint; float repr round-trips float64 exactly."""
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_checkpoint(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
