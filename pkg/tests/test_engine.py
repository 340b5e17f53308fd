import csv
import io
import math

import numpy as np
import pytest

from nsbandits import engine
from nsbandits.engine import (
    Trajectory,
    exact_ucb_regret,
    monte_carlo_regret,
    realized_regret,
    replication_rng,
    run_episode,
    summarize,
    trace_csv_text,
)
from nsbandits.forge import forge_eg_mid, forge_etc, forge_restart_composite, forge_ucb
from nsbandits.instance import Bernoulli, Instance, Segment, det_segment
from nsbandits.policies import (
    ETC,
    EpsilonGreedy,
    Fixed,
    Restarted,
    Sequence,
    UcbAnytime,
    UcbKnownHorizon,
)

LOCKED_1000_2 = 501.479719864200
EXACT_1000_2 = 250.739859932100

needs_kernel = pytest.mark.skipif(engine._kernel is None, reason="compiled kernel not built")


def bern_instance():
    return Instance(3, 300, (
        Segment(1, 120, (Bernoulli(0.3), Bernoulli(0.6), Bernoulli(0.5))),
        Segment(121, 300, (Bernoulli(0.9), Bernoulli(0.2), Bernoulli(0.5))),
    ))


class TestRegretAccounting:
    def test_realized_matches_counts(self):
        inst = bern_instance()
        tr = run_episode(inst, UcbKnownHorizon(), 3)
        assert realized_regret(inst, tr) == tr.regret

    def test_hand_computed(self):
        inst = Instance(2, 4, (det_segment(1, 2, [0.0, 1.0]), det_segment(3, 4, [0.25, 0.0])))
        tr = Trajectory(np.array([1, 2, 2, 1]), np.zeros(4), np.zeros((2, 2)), 0.0, 0)
        assert realized_regret(inst, tr) == 1.25

    def test_init_rounds_skipped(self):
        inst = Instance(2, 4, (det_segment(1, 4, [0.0, 1.0]),), init_rounds=2)
        tr = Trajectory(np.array([1, 1, 1, 2]), np.zeros(4), np.zeros((1, 2)), 0.0, 2)
        assert realized_regret(inst, tr) == 1.0

    def test_length_mismatch(self):
        inst = Instance(2, 4, (det_segment(1, 4, [0.0, 1.0]),))
        with pytest.raises(ValueError):
            realized_regret(inst, Trajectory(np.array([1, 2]), np.zeros(2), np.zeros((1, 2)), 0.0, 0))

    def test_oracle_follower_has_zero_regret(self):
        inst = bern_instance()
        rm = inst.round_means()
        arms = rm.argmax(axis=1) + 1
        assert realized_regret(inst, Trajectory(arms, np.zeros(300), np.zeros((2, 3)), 0.0, 0)) == 0.0


class TestDeterminism:
    def test_same_seed_same_episode(self):
        a = run_episode(bern_instance(), EpsilonGreedy(0.2), 42)
        b = run_episode(bern_instance(), EpsilonGreedy(0.2), 42)
        np.testing.assert_array_equal(a.arms, b.arms)
        np.testing.assert_array_equal(a.rewards, b.rewards)

    def test_replication_streams_differ(self):
        x = replication_rng(7, 0).random(4)
        y = replication_rng(7, 1).random(4)
        assert not np.array_equal(x, y)
        np.testing.assert_array_equal(x, replication_rng(7, 0).random(4))

    def test_monte_carlo_reproducible(self):
        a = monte_carlo_regret(bern_instance(), UcbAnytime(), 50, 11)
        b = monte_carlo_regret(bern_instance(), UcbAnytime(), 50, 11)
        assert (a.mean, a.stderr) == (b.mean, b.stderr)

    def test_default_seed_constant(self):
        assert engine.DEFAULT_SEED == 20251017


@needs_kernel
class TestBackendsAgree:
    @pytest.mark.parametrize("spec", [
        ETC(10), EpsilonGreedy(0.1), EpsilonGreedy(1.0), UcbKnownHorizon(), UcbAnytime(),
        Restarted(UcbKnownHorizon(), 3), Restarted(EpsilonGreedy(0.05), 4), Restarted(ETC(5), 2),
    ])
    @pytest.mark.parametrize("tie", [None, Fixed(2)])
    def test_bit_identical(self, spec, tie):
        inst = bern_instance()
        for seed in range(5):
            a = run_episode(inst, spec, seed, tie, backend="python")
            b = run_episode(inst, spec, seed, tie, backend="cython")
            np.testing.assert_array_equal(a.arms, b.arms)
            np.testing.assert_array_equal(a.rewards, b.rewards)
            np.testing.assert_array_equal(a.counts, b.counts)
            assert a.regret == b.regret

    def test_monte_carlo_identical(self):
        inst = forge_restart_composite(400, 2, 4, 2, "ucb")
        spec = Restarted(UcbKnownHorizon(), 4)
        a = monte_carlo_regret(inst, spec, 40, 5, backend="python")
        b = monte_carlo_regret(inst, spec, 40, 5, backend="cython")
        assert (a.mean, a.stderr) == (b.mean, b.stderr)


class TestForgedEpisodes:
    @pytest.mark.parametrize("m", [1, 10, 20, 50, 250])
    def test_etc_exact(self, m):
        assert run_episode(forge_etc(1000, 2, m), ETC(m), 0).regret == 1000 - m

    def test_ucb_branches(self):
        inst, p = forge_ucb(1000, 2)
        good = run_episode(inst, UcbKnownHorizon(), 0, Fixed(1))
        bad = run_episode(inst, UcbKnownHorizon(), 0, Fixed(2))
        assert good.regret == 0.0
        assert bad.regret == pytest.approx(LOCKED_1000_2, abs=1e-9)
        assert not np.any(bad.arms[p.breakpoint - 1:] == 1)

    def test_sequence_resolver_reaches_same_branch(self):
        inst, p = forge_ucb(1000, 2)
        a = run_episode(inst, UcbKnownHorizon(), 0, Sequence([2] * 1000))
        assert a.regret == pytest.approx(LOCKED_1000_2, abs=1e-9)

    @pytest.mark.parametrize("anytime", [False, True])
    def test_exact_ucb(self, anytime):
        _, p = forge_ucb(1000, 2)
        assert exact_ucb_regret(p, anytime) == pytest.approx(EXACT_1000_2, abs=1e-9)

    def test_exact_ucb_k5(self):
        _, p = forge_ucb(500, 5)
        assert exact_ucb_regret(p) == pytest.approx(102.482013204780, abs=1e-9)

    def test_deterministic_policy_zero_variance(self):
        rep = monte_carlo_regret(forge_etc(1000, 2, 20), ETC(20), 20)
        assert rep.mean == 980 and rep.stderr == 0.0

    def test_horizon_too_short(self):
        with pytest.raises(RuntimeError, match="exhausted"):
            run_episode(forge_eg_mid(100, 2), EpsilonGreedy(0.1), 0, horizon=50)


class TestSummarize:
    def test_values(self):
        r = summarize([1.0, 2.0, 3.0, 4.0], seed=1)
        assert r.mean == 2.5
        assert r.stderr == pytest.approx(math.sqrt(5 / 3 / 4))
        assert r.ci95[0] < 2.5 < r.ci95[1]

    def test_needs_two(self):
        with pytest.raises(ValueError):
            summarize([1.0], 0)


class TestTrace:
    def test_columns_and_cumulative(self):
        inst, p = forge_ucb(1000, 2)
        tr = run_episode(inst, UcbKnownHorizon(), 0, Fixed(2), trace=True)
        rows = list(csv.DictReader(io.StringIO(trace_csv_text(inst, tr))))
        assert list(rows[0]) == ["round", "arm", "reward", "oracle_arm", "oracle_mean", "step_regret",
                                 "cum_regret", "mean_1", "mean_2", "index_1", "index_2"]
        assert rows[0]["index_1"] == "inf" and rows[0]["mean_1"] == "nan"
        assert float(rows[-1]["cum_regret"]) == pytest.approx(tr.regret, abs=1e-9)
        assert rows[p.breakpoint - 1]["index_1"] == rows[p.breakpoint - 1]["index_2"]
        post = rows[p.breakpoint:]
        assert all(float(r["index_2"]) > float(r["index_1"]) for r in post)

    def test_untraced_columns(self):
        inst = forge_etc(100, 2, 10)
        text = trace_csv_text(inst, run_episode(inst, ETC(10), 0))
        assert text.splitlines()[0] == "round,arm,reward,oracle_arm,oracle_mean,step_regret,cum_regret"
        assert len(text.splitlines()) == 101

    def test_write_to_path(self, tmp_path):
        inst = forge_etc(100, 2, 10)
        out = tmp_path / "t.csv"
        engine.write_trace_csv(inst, run_episode(inst, ETC(10), 0), str(out))
        assert out.read_text().count("\n") == 101
