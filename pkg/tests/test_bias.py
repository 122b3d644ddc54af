import numpy as np
import pytest

from tddr_lab.agents import Agent, AgentConfig
from tddr_lab.bias import (
    SweepCell,
    SweepResult,
    _mc_horizon,
    collect_probe_states,
    measure_bias,
    train_and_probe,
)
from tddr_lab.envs import make_env
from tddr_lab.nets import make_rng


def small_cfg(**kw):
    kw.setdefault("hidden_dim", 16)
    kw.setdefault("embed_dim", 8)
    kw.setdefault("batch_size", 16)
    kw.setdefault("start_steps", 10)
    return AgentConfig(**kw)


class TestMcHorizon:
    def test_tail_bound_satisfied(self):
        for gamma in (0.9, 0.99, 0.5):
            T = _mc_horizon(gamma, tail=1e-3)
            assert gamma**T <= 1e-3
            assert gamma ** (T - 1) > 1e-3

    def test_cap_and_degenerate(self):
        assert _mc_horizon(0.999, cap=100) == 100
        assert _mc_horizon(0.0) == 1


class TestProbeStates:
    def test_states_come_from_env_support(self):
        env = make_env("linear_track")
        ag = Agent(small_cfg(algorithm="tddr"), env)
        states = collect_probe_states(ag, env, 10, make_rng(0))
        assert len(states) == 10
        assert all(s.shape == (1,) for s in states)

    def test_rng_isolated_from_agent(self):
        env = make_env("linear_track")
        ag = Agent(small_cfg(algorithm="tddr"), env)
        before = ag.rng_explore.bit_generator.state
        collect_probe_states(ag, env, 5, make_rng(1))
        assert ag.rng_explore.bit_generator.state == before


class TestMeasureBias:
    def test_records_are_consistent(self):
        env = make_env("linear_track")
        ag = Agent(small_cfg(algorithm="tddr"), env)
        recs = measure_bias(ag, env, 5, 1, 0.99, make_rng(2))
        assert len(recs) == 5
        for r in recs:
            assert abs(r.bias - (r.q_estimate - r.mc_return)) <= 1e-15
            assert r.mc_tail_bound <= 1e-3
            assert np.isfinite(r.mc_return)

    def test_exact_bias_on_known_value(self):
        """Zeroed critics estimate 0 everywhere; a zero-action policy on
        the track from the origin earns exactly 0, so the bias is 0."""
        env = make_env("linear_track")
        ag = Agent(small_cfg(algorithm="tddr", exploration_sigma=0.0), env)
        for net in ag.critics:
            for p in net.params():
                p[...] = 0.0
        for net in ag.actors:
            for p in net.params():
                p[...] = 0.0
        recs = measure_bias(ag, env, 3, 1, 0.99, make_rng(3))
        for r in recs:
            # probe states sit at the origin (no exploration, no drift)
            assert abs(r.bias) <= 1e-12

    def test_validates_args(self):
        env = make_env("linear_track")
        ag = Agent(small_cfg(algorithm="tddr"), env)
        with pytest.raises(ValueError):
            measure_bias(ag, env, 0, 1, 0.99, make_rng(0))


class TestTrainAndProbe:
    def test_zero_steps_still_probes(self):
        cfg = small_cfg(algorithm="tddr", seed=0)
        bias, ret, hist = train_and_probe(cfg, "linear_track", 0, 100)
        assert np.isfinite(bias) and np.isfinite(ret)
        assert len(hist["bias"]) == 1

    def test_short_run_history_lengths(self):
        cfg = small_cfg(algorithm="dadc", seed=0)
        bias, ret, hist = train_and_probe(cfg, "linear_track", 300, 100,
                                          eval_episodes=2, n_probe_states=3)
        assert len(hist["bias"]) == 3
        assert len(hist["returns"]) == 3

    def test_deterministic_given_seed(self):
        cfg = small_cfg(algorithm="sasc", seed=4)
        a = train_and_probe(cfg, "linear_track", 200, 100,
                            eval_episodes=2, n_probe_states=3)
        cfg2 = small_cfg(algorithm="sasc", seed=4)
        b = train_and_probe(cfg2, "linear_track", 200, 100,
                            eval_episodes=2, n_probe_states=3)
        assert a[0] == b[0] and a[1] == b[1]


class TestSweepResult:
    def test_aggregation_and_best(self):
        res = SweepResult(upsilons=[0.0, 1.0])
        res.cells = [
            SweepCell(0.0, 0, 1.0, -5.0), SweepCell(0.0, 1, 3.0, -7.0),
            SweepCell(1.0, 0, 0.5, -2.0), SweepCell(1.0, 1, 0.7, -4.0),
        ]
        rows = res.per_upsilon()
        assert rows[0][:2] == (0.0, 2.0)  # mean bias over seeds
        assert rows[1][3] == -3.0  # mean return at u = 1
        assert res.best_upsilon() == 1.0
