"""Small fully connected Q-network: forward, backprop and Adam, in float64 numpy.

Hidden layers use ReLU, the output layer is linear.  Training minimizes the
mean squared error on the Q-value of the taken action only; gradients do not
flow through the other outputs.
"""

from __future__ import annotations

import numpy as np

CHECKPOINT_MAGIC = "uavmec-mlp v1"


class MlpNetwork:
    """Weights and biases for dims[0] -> dims[1] -> ... -> dims[-1]."""

    def __init__(self, dims: list, weights: list, biases: list):
        self.dims = list(dims)
        self.weights = weights  # weights[l]: (dims[l], dims[l+1])
        self.biases = biases  # biases[l]: (dims[l+1],)

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def parameters(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "MlpNetwork":
        return MlpNetwork(self.dims, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def copy_from(self, other: "MlpNetwork") -> None:
        for mine, theirs in zip(self.parameters(), other.parameters()):
            mine[...] = theirs


def init_mlp(dims: list, rng: np.random.Generator) -> MlpNetwork:
    """Xavier-uniform weights (+- sqrt(6 / (fan_in + fan_out))), zero biases."""
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError("dims must list at least input and output widths, all >= 1")
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return MlpNetwork(dims, weights, biases)


def forward(net: MlpNetwork, x) -> np.ndarray:
    """Q-values for a single state (1-d input) or a batch (2-d input)."""
    single = np.ndim(x) == 1
    a = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if a.shape[1] != net.dims[0]:
        raise ValueError(f"input width {a.shape[1]} != network input {net.dims[0]}")
    last = net.num_layers - 1
    for layer, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w + b
        if layer != last:
            a = np.maximum(a, 0.0)
    return a[0] if single else a


def forward_cached(net: MlpNetwork, x: np.ndarray):
    """Batch forward keeping post-activation values per layer for backprop."""
    activations = [np.asarray(x, dtype=np.float64)]
    last = net.num_layers - 1
    a = activations[0]
    for layer, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w + b
        if layer != last:
            a = np.maximum(a, 0.0)
        activations.append(a)
    return activations


def loss_and_grads(net: MlpNetwork, states: np.ndarray, actions: np.ndarray, targets: np.ndarray):
    """MSE over the taken actions' Q-values, with gradients for every parameter.

    loss = mean_i (Q(s_i)[a_i] - y_i)^2.  Returns (loss, grads) with grads
    ordered like net.parameters().
    """
    batch = states.shape[0]
    activations = forward_cached(net, states)
    q = activations[-1]
    idx = np.arange(batch)
    taken = q[idx, actions]
    err = taken - targets
    loss = float(np.mean(err**2))

    delta = np.zeros_like(q)
    delta[idx, actions] = 2.0 * err / batch
    grads_w = [None] * net.num_layers
    grads_b = [None] * net.num_layers
    for layer in range(net.num_layers - 1, -1, -1):
        a_prev = activations[layer]
        grads_w[layer] = a_prev.T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ net.weights[layer].T) * (activations[layer] > 0.0)
    grads = []
    for gw, gb in zip(grads_w, grads_b):
        grads.extend((gw, gb))
    return loss, grads


class AdamState:
    """First/second moment accumulators with bias correction."""

    def __init__(self, params: list, lr: float = 0.001, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]


def adam_step(adam: AdamState, params: list, grads: list) -> None:
    """One in-place update of every parameter."""
    adam.t += 1
    b1, b2 = adam.beta1, adam.beta2
    bias1 = 1.0 - b1**adam.t
    bias2 = 1.0 - b2**adam.t
    for p, g, m, v in zip(params, grads, adam.m, adam.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g**2
        p -= adam.lr * (m / bias1) / (np.sqrt(v / bias2) + adam.eps)


def _write_tensor(lines: list, name: str, tensor: np.ndarray) -> None:
    shape = "x".join(str(s) for s in tensor.shape)
    values = " ".join(format(v, ".17g") for v in tensor.reshape(-1))
    lines.append(f"tensor {name} {shape} {values}")


def _read_tensor(line: str):
    _, name, shape_txt, *values = line.split(" ")
    shape = tuple(int(s) for s in shape_txt.split("x"))
    data = np.array([float(v) for v in values], dtype=np.float64).reshape(shape)
    return name, data


def save_mlp(nets: list, path: str, metadata: dict | None = None) -> None:
    """Write one or more networks as self-describing text: dims header, then
    row-major tensors, full float64 precision."""
    lines = [CHECKPOINT_MAGIC]
    for k, v in sorted((metadata or {}).items()):
        lines.append(f"meta {k}={v}")
    lines.append(f"agents {len(nets)}")
    for i, net in enumerate(nets):
        dims = " ".join(str(d) for d in net.dims)
        lines.append(f"agent {i} dims {dims}")
        for layer, (w, b) in enumerate(zip(net.weights, net.biases)):
            _write_tensor(lines, f"w{layer}", w)
            _write_tensor(lines, f"b{layer}", b)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mlp(path: str) -> tuple[list, dict]:
    """Read networks saved by save_mlp; returns (networks, metadata)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise ValueError(f"not an mlp checkpoint: {path}")
    meta: dict = {}
    i = 1
    while i < len(lines) and lines[i].startswith("meta "):
        k, v = lines[i][5:].split("=", 1)
        meta[k] = v
        i += 1
    if i >= len(lines) or not lines[i].startswith("agents "):
        raise ValueError(f"malformed mlp checkpoint: {path}")
    num_agents = int(lines[i].split()[1])
    i += 1
    nets = []
    for _ in range(num_agents):
        header = lines[i].split()
        if header[0] != "agent" or header[2] != "dims":
            raise ValueError(f"malformed mlp checkpoint: {path}")
        dims = [int(d) for d in header[3:]]
        i += 1
        weights, biases = [], []
        for layer in range(len(dims) - 1):
            name_w, w = _read_tensor(lines[i])
            name_b, b = _read_tensor(lines[i + 1])
            if name_w != f"w{layer}" or name_b != f"b{layer}":
                raise ValueError(f"malformed mlp checkpoint: {path}")
            if w.shape != (dims[layer], dims[layer + 1]) or b.shape != (dims[layer + 1],):
                raise ValueError(f"tensor shape mismatch in {path}")
            weights.append(w)
            biases.append(b)
            i += 2
        nets.append(MlpNetwork(dims, weights, biases))
    return nets, meta
