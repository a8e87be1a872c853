"""Channels: exact transition vectors, sampling frequencies, symmetrization."""

import numpy as np
import pytest

from gachagt.channels import (
    DiscreteChannel,
    ZeroCapacityError,
    apply_plan_many,
    apply_symmetrized,
    bec,
    bsc,
    fn_channel,
    fp_channel,
    make_channel,
    parse_channel_spec,
    plan_symmetrize,
    _error_rates,
)


def test_bsc_zero_is_identity():
    ch = bsc(0.0)
    assert ch.mu0 == (1.0, 0.0)
    assert ch.mu1 == (0.0, 1.0)


def test_fp_channel_exact_vectors():
    ch = fp_channel(0.2)
    assert ch.mu0 == (0.8, 0.2)
    assert ch.mu1 == (0.0, 1.0)


def test_bec_exact_vectors():
    ch = bec(0.2)
    assert ch.mu0 == (0.8, 0.2, 0.0)
    assert ch.mu1 == (0.0, 0.2, 0.8)


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        bsc(0.6)
    with pytest.raises(ValueError):
        fp_channel(1.0)
    with pytest.raises(ValueError):
        make_channel("bogus", 0.1)
    with pytest.raises(ValueError):
        DiscreteChannel((0.5, 0.6), (0.2, 0.8))  # does not sum to 1
    with pytest.raises(ZeroCapacityError):
        DiscreteChannel((0.5, 0.5), (0.5, 0.5))


def test_rows_are_probability_vectors():
    for ch in (bsc(0.3), bec(0.4), fp_channel(0.2), fn_channel(0.25)):
        for mu in (ch.mu0, ch.mu1):
            assert abs(sum(mu) - 1.0) < 1e-12
            assert all(p >= 0 for p in mu)


def test_transmit_deterministic_cases():
    rng = np.random.default_rng(0)
    ch = bsc(0.0)
    assert all(ch.transmit(1, rng) == 1 for _ in range(20))
    fn = fn_channel(0.25)
    assert all(fn.transmit(0, rng) == 0 for _ in range(20))


def test_transmit_frequency_bsc():
    ch = bsc(0.3)
    rng = np.random.default_rng(7)
    out = ch.transmit_many(np.zeros(10 ** 6, dtype=np.uint8), rng)
    assert abs(out.mean() - 0.30) < 0.005


def test_transmit_many_matches_scalar_distribution():
    ch = bec(0.4)
    rng = np.random.default_rng(3)
    out = ch.transmit_many(np.ones(200000, dtype=np.uint8), rng)
    counts = np.bincount(out, minlength=3) / len(out)
    assert abs(counts[1] - 0.4) < 0.01
    assert abs(counts[2] - 0.6) < 0.01
    assert counts[0] == 0


def test_symmetrize_fp_exact_crossover():
    plan = plan_symmetrize(fp_channel(0.2))
    assert abs(plan.crossover - 1 / 6) < 1e-9
    p10, p01 = _error_rates(fp_channel(0.2), plan.order, plan.t)
    assert abs(p10 - p01) < 1e-9


def test_symmetrize_bsc_fixed_point():
    for s in (0.05, 0.2, 0.4):
        plan = plan_symmetrize(bsc(s))
        assert abs(plan.crossover - s) < 1e-9


def test_symmetrize_bec_half_mass():
    plan = plan_symmetrize(bec(0.4))
    assert abs(plan.crossover - 0.2) < 1e-9


def test_symmetrize_fn_self_consistent():
    ch = fn_channel(0.3)
    plan = plan_symmetrize(ch)
    p10, p01 = _error_rates(ch, plan.order, plan.t)
    assert abs(p10 - p01) < 1e-9
    assert abs(plan.crossover - 3 / 13) < 1e-6  # solves 1 - t = 0.3 t


def test_likelihood_order_non_decreasing():
    rng = np.random.default_rng(5)
    for _ in range(50):
        q = int(rng.integers(2, 7))
        mu0 = rng.random(q) + 1e-3
        mu1 = rng.random(q) + 1e-3
        mu0, mu1 = tuple(mu0 / mu0.sum()), tuple(mu1 / mu1.sum())
        try:
            ch = DiscreteChannel(mu0, mu1)
        except ZeroCapacityError:
            continue
        plan = plan_symmetrize(ch)
        ratios = [ch.mu1[s] / ch.mu0[s] for s in plan.order]
        assert all(a <= b + 1e-12 for a, b in zip(ratios, ratios[1:]))
        p10, p01 = _error_rates(ch, plan.order, plan.t)
        assert abs(p10 - p01) < 1e-9
        assert plan.crossover < 0.5


def test_apply_symmetrized_empirical_fp():
    ch = fp_channel(0.2)
    plan = plan_symmetrize(ch)
    rng = np.random.default_rng(11)
    n = 10 ** 6
    z0 = ch.transmit_many(np.zeros(n, dtype=np.uint8), rng)
    z1 = ch.transmit_many(np.ones(n, dtype=np.uint8), rng)
    b0 = apply_plan_many(plan, z0, rng)
    b1 = apply_plan_many(plan, z1, rng)
    assert abs(b0.mean() - 1 / 6) < 0.005          # P(1 | 0)
    assert abs((1 - b1.mean()) - 1 / 6) < 0.005    # P(0 | 1)


def test_apply_symmetrized_scalar_agrees():
    ch = bec(0.4)
    plan = plan_symmetrize(ch)
    rng = np.random.default_rng(13)
    flips = sum(apply_symmetrized(plan, ch, 0, rng) for _ in range(20000))
    assert abs(flips / 20000 - 0.2) < 0.02


def test_symmetrized_bsc_preserves_distribution():
    # over an already-symmetric channel the plan reproduces the crossover
    ch = bsc(0.15)
    plan = plan_symmetrize(ch)
    rng = np.random.default_rng(17)
    z = ch.transmit_many(np.zeros(200000, dtype=np.uint8), rng)
    b = apply_plan_many(plan, z, rng)
    assert abs(b.mean() - 0.15) < 0.005


def test_parse_channel_spec():
    assert parse_channel_spec("none") is None
    assert parse_channel_spec("bsc:0.1").mu0 == (0.9, 0.1)
    assert parse_channel_spec("fp:0.2").mu1 == (0.0, 1.0)
    with pytest.raises(ValueError):
        parse_channel_spec("bsc:0.6")
    with pytest.raises(ValueError):
        parse_channel_spec("what:0.1")


def test_parse_custom_csv(tmp_path):
    path = tmp_path / "ch.csv"
    path.write_text("symbol,mu0,mu1\n0,0.9,0.1\n1,0.1,0.9\n")
    ch = parse_channel_spec(f"custom:{path}")
    assert ch.mu0 == (0.9, 0.1)
    assert ch.mu1 == (0.1, 0.9)
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        parse_channel_spec(f"custom:{bad}")
