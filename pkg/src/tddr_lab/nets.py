"""From-scratch dense feed-forward networks with exact backprop and Adam.

Everything runs in float64. Networks operate on single vectors or on
batches (rows); gradients returned by ``backward`` are summed over the
batch, so loss functions divide by N themselves.
"""

from __future__ import annotations

import numpy as np

EPS_NORM = 1e-8  # degenerate guard for avg_l1_norm


class ShapeError(ValueError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator; identical seeds give bit-identical draw sequences."""
    return np.random.Generator(np.random.PCG64(seed))


def avg_l1_norm(v: np.ndarray) -> np.ndarray:
    """Divide by the mean absolute value across the last axis.

    Vectors whose mean |.| falls below EPS_NORM pass through unchanged.
    """
    v = np.asarray(v, dtype=np.float64)
    m = np.mean(np.abs(v), axis=-1, keepdims=True)
    safe = np.where(m < EPS_NORM, 1.0, m)
    return np.where(m < EPS_NORM, v, v / safe)


def avg_l1_norm_backward(v: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Vector-Jacobian product of avg_l1_norm at v.

    d(v_j / m)/d v_k = delta_jk / m - v_j sign(v_k) / (n m^2); degenerate
    rows (m < EPS_NORM) are identity.
    """
    v = np.asarray(v, dtype=np.float64)
    n = v.shape[-1]
    m = np.mean(np.abs(v), axis=-1, keepdims=True)
    safe = np.where(m < EPS_NORM, 1.0, m)
    dot = np.sum(grad_out * v, axis=-1, keepdims=True)
    gv = grad_out / safe - dot * np.sign(v) / (n * safe * safe)
    return np.where(m < EPS_NORM, grad_out, gv)


def sample_clipped_gaussian(rng, sigma: float, clip: float, dim: int) -> np.ndarray:
    """clip(N(0, sigma), -clip, +clip), componentwise."""
    if sigma == 0.0:
        # still consume a draw so sigma=0 runs stay stream-aligned
        rng.standard_normal(dim)
        return np.zeros(dim)
    return np.clip(rng.standard_normal(dim) * sigma, -clip, clip)


class Mlp:
    """Fully-connected net: ReLU hidden layers, Identity or ScaledTanh output.

    Weights W[k] have shape (in, out); forward is x @ W + b.
    """

    def __init__(self, layer_dims, rng, output="identity", bound=1.0):
        if len(layer_dims) < 2:
            raise ShapeError("need at least one affine layer")
        if output not in ("identity", "tanh"):
            raise ValueError(f"unknown output activation {output!r}")
        self.layer_dims = list(layer_dims)
        self.output = output
        self.bound = float(bound)
        self.weights = []
        self.biases = []
        for din, dout in zip(layer_dims[:-1], layer_dims[1:]):
            # uniform fan-in scaling, seed-deterministic
            lim = 1.0 / np.sqrt(din)
            self.weights.append(rng.uniform(-lim, lim, size=(din, dout)))
            self.biases.append(rng.uniform(-lim, lim, size=dout))

    @property
    def in_dim(self):
        return self.layer_dims[0]

    @property
    def out_dim(self):
        return self.layer_dims[-1]

    def params(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def set_params(self, params):
        flat = self.params()
        if len(params) != len(flat):
            raise ShapeError("parameter count mismatch")
        for dst, src in zip(flat, params):
            if dst.shape != src.shape:
                raise ShapeError("parameter shape mismatch")
            dst[...] = src

    def copy_from(self, other: "Mlp"):
        self.set_params(other.params())

    def clone(self) -> "Mlp":
        out = Mlp.__new__(Mlp)
        out.layer_dims = list(self.layer_dims)
        out.output = self.output
        out.bound = self.bound
        out.weights = [w.copy() for w in self.weights]
        out.biases = [b.copy() for b in self.biases]
        return out

    def forward(self, x, want_cache=False):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.layer_dims[0]:
            raise ShapeError(
                f"input dim {x.shape[-1]} != expected {self.layer_dims[0]}"
            )
        acts = [x]  # post-activation of each layer, acts[0] is the input
        h = x
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            if k < last:
                h = np.maximum(z, 0.0)
            elif self.output == "tanh":
                h = self.bound * np.tanh(z)
            else:
                h = z
            acts.append(h)
        if want_cache:
            return h, acts
        return h

    def backward(self, cache, grad_out):
        """Exact gradients from a forward cache.

        Returns (param_grads, input_grad); param_grads is a flat list
        matching params(), summed over batch rows.
        """
        acts = cache
        if len(acts) != len(self.weights) + 1:
            raise ShapeError("stale or foreign cache")
        g = np.asarray(grad_out, dtype=np.float64)
        if g.shape != acts[-1].shape:
            raise ShapeError("grad_out shape mismatch")
        last = len(self.weights) - 1
        if self.output == "tanh":
            y = acts[-1]
            g = g * (self.bound - y * y / self.bound)
        grads = [None] * (2 * len(self.weights))
        for k in range(last, -1, -1):
            if k < last:
                g = g * (acts[k + 1] > 0.0)
            x = acts[k]
            if x.ndim == 1:
                grads[2 * k] = np.outer(x, g)
                grads[2 * k + 1] = g.copy()
            else:
                grads[2 * k] = x.T @ g
                grads[2 * k + 1] = g.sum(axis=0)
            g = g @ self.weights[k].T
        return grads, g


class Adam:
    """Standard Adam with bias correction over a flat parameter list."""

    def __init__(self, params, lr=3e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        if len(params) != len(self.m) or len(grads) != len(self.m):
            raise ShapeError("optimizer/parameter list mismatch")
        self.step_count += 1
        b1t = 1.0 - self.beta1 ** self.step_count
        b2t = 1.0 - self.beta2 ** self.step_count
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if p.shape != g.shape:
                raise ShapeError("gradient shape mismatch")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def soft_update(target: Mlp, online: Mlp, tau: float):
    """target <- tau * online + (1 - tau) * target, elementwise."""
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must be in (0, 1]")
    for tp, op in zip(target.params(), online.params()):
        if tp.shape != op.shape:
            raise ShapeError("target/online shape mismatch")
        tp *= 1.0 - tau
        tp += tau * op
