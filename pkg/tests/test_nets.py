import numpy as np
import numpy.testing as npt
import pytest

from tddr_lab import gradcheck
from tddr_lab.nets import (
    Adam,
    Mlp,
    ShapeError,
    avg_l1_norm,
    avg_l1_norm_backward,
    make_rng,
    sample_clipped_gaussian,
    soft_update,
)


def zeroed(net):
    for p in net.params():
        p[...] = 0.0
    return net


class TestForward:
    def test_zero_net_gives_zero_output(self):
        net = zeroed(Mlp([3, 4, 2], make_rng(0)))
        npt.assert_array_equal(net.forward(np.array([1.0, -2.0, 3.0])), np.zeros(2))

    def test_single_identity_layer(self):
        net = Mlp([2, 2], make_rng(0))
        net.weights[0][...] = np.eye(2)
        net.biases[0][...] = 0.0
        npt.assert_array_equal(net.forward(np.array([1.5, -2.0])), [1.5, -2.0])

    def test_matches_straight_line_evaluation(self):
        rng = make_rng(42)
        net = Mlp([3, 5, 5, 2], rng)
        x = rng.uniform(-1, 1, size=3)
        # independent naive evaluation of the same weights
        h = x
        for k, (w, b) in enumerate(zip(net.weights, net.biases)):
            z = np.array([sum(h[i] * w[i, j] for i in range(len(h))) + b[j]
                          for j in range(w.shape[1])])
            h = np.maximum(z, 0) if k < 2 else z
        npt.assert_allclose(net.forward(x), h, rtol=1e-12)

    def test_dimension_mismatch_raises(self):
        net = Mlp([3, 2], make_rng(0))
        with pytest.raises(ShapeError):
            net.forward(np.zeros(4))

    def test_scaled_tanh_respects_bound(self):
        rng = make_rng(1)
        net = Mlp([2, 8, 1], rng, output="tanh", bound=2.0)
        for _ in range(100):
            y = net.forward(rng.uniform(-10, 10, size=2))
            assert np.all(np.abs(y) <= 2.0)

    def test_batched_forward_matches_rowwise(self):
        rng = make_rng(3)
        net = Mlp([3, 6, 2], rng)
        X = rng.uniform(-1, 1, size=(5, 3))
        batched = net.forward(X)
        rows = np.stack([net.forward(x) for x in X])
        npt.assert_allclose(batched, rows, rtol=1e-12)


class TestBackward:
    def test_zero_output_grad_gives_zero_grads(self):
        rng = make_rng(0)
        net = Mlp([3, 4, 2], rng)
        _, cache = net.forward(rng.uniform(-1, 1, 3), want_cache=True)
        grads, gx = net.backward(cache, np.zeros(2))
        assert all(np.all(g == 0) for g in grads)
        npt.assert_array_equal(gx, np.zeros(3))

    def test_scalar_linear_analytic(self):
        net = Mlp([1, 1], make_rng(0))
        net.weights[0][...] = 3.0
        net.biases[0][...] = 0.0
        x = np.array([2.0])
        _, cache = net.forward(x, want_cache=True)
        grads, gx = net.backward(cache, np.array([1.0]))
        npt.assert_allclose(grads[0], [[2.0]])  # dW = x
        npt.assert_allclose(gx, [3.0])  # input grad = w

    def test_matches_finite_differences(self):
        rng = make_rng(7)
        for _ in range(10):
            net, x = gradcheck.random_net_and_input(rng)
            target = rng.uniform(-1, 1, size=net.out_dim)
            assert gradcheck.check_mlp(net, x, target) <= 1e-4

    def test_batched_grads_sum_over_rows(self):
        rng = make_rng(9)
        net = Mlp([2, 4, 1], rng)
        X = rng.uniform(-1, 1, size=(3, 2))
        _, cache = net.forward(X, want_cache=True)
        g = rng.uniform(-1, 1, size=(3, 1))
        grads, _ = net.backward(cache, g)
        acc = [np.zeros_like(p) for p in net.params()]
        for x, gr in zip(X, g):
            _, c = net.forward(x, want_cache=True)
            gi, _ = net.backward(c, gr)
            for a, b in zip(acc, gi):
                a += b
        for a, b in zip(acc, grads):
            npt.assert_allclose(a, b, rtol=1e-12)


class TestAdam:
    def test_zero_gradient_is_fixed_point(self):
        p = [np.array([1.0, -2.0])]
        opt = Adam(p)
        opt.step(p, [np.zeros(2)])
        npt.assert_array_equal(p[0], [1.0, -2.0])

    def test_first_step_is_bias_corrected_unit_update(self):
        p = [np.array([0.0])]
        opt = Adam(p, lr=0.1)
        opt.step(p, [np.array([1.0])])
        npt.assert_allclose(p[0], [-0.1], atol=1e-8)

    def test_descends_quadratic(self):
        # textbook Adam recursion on f(x) = x^2
        x = [np.array([1.0])]
        opt = Adam(x, lr=0.1)
        for _ in range(10):
            opt.step(x, [2.0 * x[0]])
        assert abs(x[0][0]) < 1.0

    def test_step_count_increments(self):
        p = [np.zeros(1)]
        opt = Adam(p)
        for k in range(1, 4):
            opt.step(p, [np.ones(1)])
            assert opt.step_count == k


class TestAvgL1Norm:
    def test_analytic_case(self):
        npt.assert_allclose(avg_l1_norm(np.array([2.0, -2.0, 4.0])),
                            [0.75, -0.75, 1.5])

    def test_unit_mean_abs_fixed_point(self):
        npt.assert_array_equal(avg_l1_norm(np.ones(3)), np.ones(3))

    def test_degenerate_zero_guard(self):
        npt.assert_array_equal(avg_l1_norm(np.zeros(2)), np.zeros(2))

    def test_output_mean_abs_is_one(self):
        rng = make_rng(5)
        for _ in range(50):
            v = rng.uniform(-3, 3, size=int(rng.integers(1, 10)))
            out = avg_l1_norm(v)
            if np.mean(np.abs(v)) >= 1e-8:
                assert abs(np.mean(np.abs(out)) - 1.0) <= 1e-12

    def test_backward_matches_finite_differences(self):
        rng = make_rng(6)
        v = rng.uniform(0.2, 2.0, size=5) * rng.choice([-1, 1], size=5)
        g = rng.uniform(-1, 1, size=5)
        h = 1e-6
        fd = np.zeros(5)
        for k in range(5):
            vp, vm = v.copy(), v.copy()
            vp[k] += h
            vm[k] -= h
            fd[k] = np.dot(g, avg_l1_norm(vp) - avg_l1_norm(vm)) / (2 * h)
        npt.assert_allclose(avg_l1_norm_backward(v, g), fd, rtol=1e-6, atol=1e-9)


class TestClippedGaussian:
    def test_sigma_zero_gives_zero_vector(self):
        npt.assert_array_equal(
            sample_clipped_gaussian(make_rng(0), 0.0, 0.5, 4), np.zeros(4))

    def test_clipping_bound(self):
        rng = make_rng(1)
        draws = np.concatenate(
            [sample_clipped_gaussian(rng, 0.2, 0.5, 100) for _ in range(1000)])
        assert np.all(np.abs(draws) <= 0.5)

    def test_seed_determinism(self):
        a = sample_clipped_gaussian(make_rng(11), 0.3, 0.5, 8)
        b = sample_clipped_gaussian(make_rng(11), 0.3, 0.5, 8)
        npt.assert_array_equal(a, b)


class TestSoftUpdate:
    def test_tau_one_copies(self):
        rng = make_rng(0)
        online, target = Mlp([2, 2], rng), Mlp([2, 2], rng)
        soft_update(target, online, 1.0)
        for tp, op in zip(target.params(), online.params()):
            npt.assert_array_equal(tp, op)

    def test_arithmetic(self):
        rng = make_rng(0)
        online, target = Mlp([1, 1], rng), Mlp([1, 1], rng)
        online.weights[0][...] = 1.0
        target.weights[0][...] = 0.0
        soft_update(target, online, 0.005)
        npt.assert_allclose(target.weights[0], [[0.005]])

    def test_geometric_convergence(self):
        rng = make_rng(0)
        online, target = Mlp([1, 1], rng), Mlp([1, 1], rng)
        online.weights[0][...] = 1.0
        target.weights[0][...] = 0.0
        tau = 0.1
        err = 1.0
        for _ in range(20):
            soft_update(target, online, tau)
            new_err = abs(1.0 - target.weights[0][0, 0])
            npt.assert_allclose(new_err, (1 - tau) * err, rtol=1e-10)
            err = new_err


def test_rng_determinism():
    a = make_rng(123).standard_normal(100)
    b = make_rng(123).standard_normal(100)
    npt.assert_array_equal(a, b)
