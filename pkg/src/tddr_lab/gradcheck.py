"""Central finite-difference gradient checking for the hand-rolled backprop."""

from __future__ import annotations

import numpy as np

from .encoders import EncoderPair, encoder_loss_and_grads
from .nets import Mlp, avg_l1_norm, make_rng


def fd_param_grads(loss_fn, params, h=1e-5):
    """Central finite differences of loss_fn over a flat parameter list."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            up = loss_fn()
            flat[k] = orig - h
            down = loss_fn()
            flat[k] = orig
            gflat[k] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def max_rel_error(analytic, numeric, floor=1e-6):
    """Max relative error across two parameter-grad lists."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def check_mlp(net: Mlp, x, target, h=1e-5):
    """Relative error of backprop vs finite differences for 0.5*||y - t||^2."""
    def loss_fn():
        y = net.forward(x)
        return 0.5 * float(np.sum((y - target) ** 2))

    y, cache = net.forward(x, want_cache=True)
    grads, _ = net.backward(cache, y - target)
    fd = fd_param_grads(loss_fn, net.params(), h=h)
    return max_rel_error(grads, fd)


def check_encoder(pair: EncoderPair, states, actions, next_states, h=1e-5):
    """Relative error of the dynamics-prediction loss gradients.

    The next-state embedding is a stop-gradient in the analytic path, so
    the finite-difference loss evaluates it with a frozen clone; otherwise
    perturbing the state encoder would leak through the target branch.
    """
    frozen = pair.clone()

    def loss_fn():
        e_s2 = avg_l1_norm(frozen.es_net.forward(np.atleast_2d(next_states)))
        e_s = avg_l1_norm(pair.es_net.forward(np.atleast_2d(states)))
        e_sa = pair.encode_state_action(e_s, np.atleast_2d(actions))
        return float(np.mean((e_sa - e_s2) ** 2))

    _, grads = encoder_loss_and_grads(pair, states, actions, next_states)
    fd = fd_param_grads(loss_fn, pair.params(), h=h)
    return max_rel_error(grads, fd)


def random_net_and_input(rng, output="identity", bound=1.0):
    """A random 3-affine-layer net and an input clear of ReLU kinks."""
    dims = [int(rng.integers(2, 6)), int(rng.integers(4, 9)),
            int(rng.integers(4, 9)), int(rng.integers(1, 4))]
    net = Mlp(dims, rng, output=output, bound=bound)
    x = rng.uniform(-1.0, 1.0, size=dims[0])
    return net, x


def run_gradcheck(n_nets=100, seed=0) -> float:
    """Worst relative error over random nets (identity and tanh heads)."""
    rng = make_rng(seed)
    worst = 0.0
    for k in range(n_nets):
        output = "tanh" if k % 3 == 0 else "identity"
        net, x = random_net_and_input(rng, output=output, bound=2.0)
        target = rng.uniform(-1.0, 1.0, size=net.out_dim)
        worst = max(worst, check_mlp(net, x, target))
    return worst
