"""Coupling construction, schedules, marginal preservation, decay stats."""

from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from sawlab.counting import enumerate_paths
from sawlab.coupling import (
    CouplingSchedule,
    estimate_decoupling_stats,
    run_one_sided_coupling,
    run_two_sided_coupling,
    wilson_interval,
)
from sawlab.errors import ImpossiblePrefixError
from sawlab.lattice import Path, TwoSidedPath, escapes, validate
from sawlab.sampling import SamplerConfig, SawSampler


def test_schedule_geometric_rule():
    s = CouplingSchedule.geometric(1, 20)
    assert s.start == 1
    assert s.values[0] >= 2
    assert all(b > a for a, b in zip((s.start,) + s.values, s.values))
    assert s.values[-1] >= 20
    # the doubling rule with scale k
    s2 = CouplingSchedule.geometric(2, 40, base=2.0)
    assert s2.values == (4, 8, 16, 32, 64)


def test_schedule_blocks_clip_to_horizon():
    s = CouplingSchedule.explicit(1, [2, 4, 8])
    assert s.blocks(6) == [(1, 2), (2, 4), (4, 6)]
    assert s.blocks(8) == [(1, 2), (2, 4), (4, 8)]
    with pytest.raises(ValueError):
        s.blocks(9)
    with pytest.raises(ValueError):
        CouplingSchedule.explicit(2, [2])


def test_identical_prefixes_always_couple():
    z = validate([0], 5)
    sched = CouplingSchedule.geometric(1, 6)
    for seed in range(20):
        trace = run_one_sided_coupling(5, z, z, sched, 6, SamplerConfig(seed=seed))
        assert trace.all_successful()
        assert trace.walk1.steps == trace.walk2.steps
        assert trace.final_equal_from() == 0
        assert len(trace.walk1) == 6


def test_outputs_extend_prefixes():
    z1, z2 = validate([0], 5), validate([2], 5)
    sched = CouplingSchedule.geometric(1, 8)
    trace = run_one_sided_coupling(5, z1, z2, sched, 8, SamplerConfig(seed=3))
    assert trace.walk1.steps[:1] == z1.steps
    assert trace.walk2.steps[:1] == z2.steps
    validate(trace.walk1.steps, 5)
    validate(trace.walk2.steps, 5)


def test_impossible_prefix_rejected():
    trap = validate([3, 0, 0, 2, 2, 1, 3], 2)
    sched = CouplingSchedule.geometric(7, 12)
    with pytest.raises(ImpossiblePrefixError):
        run_one_sided_coupling(2, trap, trap, sched, 12, SamplerConfig(seed=1))


def test_one_block_success_frequency_matches_enumeration():
    """With a single block covering the horizon, success happens exactly
    when the first proxy escaping either prefix escapes both."""
    d, horizon = 5, 6
    z1, z2 = validate([0], d), validate([2], d)
    both = either = 0
    for codes in enumerate_paths(d, horizon - 1):
        p = Path(d, codes)
        e1, e2 = escapes(p, z1), escapes(p, z2)
        both += e1 and e2
        either += e1 or e2
    exact = Fraction(both, either)

    sched = CouplingSchedule.explicit(1, [horizon])
    trials, succ = 20_000, 0
    cfg = SamplerConfig(seed=101)
    for trial in range(trials):
        sampler = SawSampler(d, cfg, extra_key=(trial,))
        trace = run_one_sided_coupling(d, z1, z2, sched, horizon, sampler=sampler)
        succ += trace.records[0].success
    sigma = (float(exact) * (1 - float(exact)) / trials) ** 0.5
    assert abs(succ / trials - float(exact)) <= 4 * sigma


def test_marginal_preservation_small_case():
    """Output-1 of the coupling is uniform over walks extending its prefix."""
    d, horizon, trials = 5, 4, 40_000
    z1, z2 = validate([0], d), validate([2], d)
    sched = CouplingSchedule.geometric(1, horizon)
    support = enumerate_paths(d, horizon, prefix=z1)
    index = {codes: i for i, codes in enumerate(support)}
    counts = np.zeros(len(support))
    cfg = SamplerConfig(seed=202)
    for trial in range(trials):
        sampler = SawSampler(d, cfg, extra_key=(trial,))
        trace = run_one_sided_coupling(d, z1, z2, sched, horizon, sampler=sampler)
        counts[index[trace.walk1.steps]] += 1
    expected = trials / len(support)
    statistic = float(((counts - expected) ** 2 / expected).sum())
    assert statistic <= stats.chi2.isf(1e-3, len(support) - 1)


def test_two_sided_identical_middles_always_couple():
    d = 5
    mid = TwoSidedPath(validate([1], d), validate([0], d))
    sched = CouplingSchedule.geometric(1, 4)
    for seed in range(10):
        trace = run_two_sided_coupling(d, 4, 4, mid, mid, sched,
                                       SamplerConfig(seed=seed))
        assert trace.all_successful()
        assert trace.walk1.neg.steps == trace.walk2.neg.steps
        assert trace.walk1.pos.steps == trace.walk2.pos.steps
        assert trace.walk1.neg_length == 4 and trace.walk1.pos_length == 4


def test_two_sided_degenerate_side_lengths():
    # one side shorter than the schedule horizon: length-0 appends
    d = 5
    mid = TwoSidedPath(validate([1], d), validate([0], d))
    sched = CouplingSchedule.geometric(1, 5)
    trace = run_two_sided_coupling(d, 2, 5, mid, mid, sched, SamplerConfig(seed=4))
    assert trace.walk1.neg_length == 2 and trace.walk1.pos_length == 5


def test_two_sided_one_block_success_matches_enumeration():
    d, m, n = 5, 3, 3
    mid1 = TwoSidedPath(validate([1], d), validate([0], d))
    mid2 = TwoSidedPath(validate([3], d), validate([2], d))
    sched = CouplingSchedule.explicit(1, [3])

    def fits(mid, neg_codes, pos_codes):
        try:
            from sawlab.lattice import concat, validate_two_sided
            full_neg = concat(mid.neg, Path(d, bytes(neg_codes)))
            full_pos = concat(mid.pos, Path(d, bytes(pos_codes)))
            validate_two_sided(full_neg, full_pos)
            return True
        except Exception:
            return False

    sides = enumerate_paths(d, m - 1)
    both = either = 0
    for neg in sides:
        for pos in sides:
            f1 = fits(mid1, neg, pos)
            f2 = fits(mid2, neg, pos)
            both += f1 and f2
            either += f1 or f2
    exact = both / either

    trials, succ = 8000, 0
    cfg = SamplerConfig(seed=303)
    for trial in range(trials):
        sampler = SawSampler(d, cfg, extra_key=(trial,))
        trace = run_two_sided_coupling(d, m, n, mid1, mid2, sched, sampler=sampler)
        succ += trace.records[0].success
    sigma = (exact * (1 - exact) / trials) ** 0.5
    assert abs(succ / trials - exact) <= 4 * sigma


def test_decoupling_stats_identical_prefixes_zero_failures():
    z = validate([0], 5)
    sched = CouplingSchedule.geometric(1, 8)
    out = estimate_decoupling_stats(5, z, z, sched, 8, 200, SamplerConfig(seed=5))
    assert all(r.failures == 0 for r in out.decay)
    assert all(r.disagreements == 0 for r in out.tails)


def test_decoupling_stats_rows_and_reproducibility():
    z1, z2 = validate([0], 5), validate([2], 5)
    sched = CouplingSchedule.geometric(1, 12)
    a = estimate_decoupling_stats(5, z1, z2, sched, 12, 400, SamplerConfig(seed=6))
    b = estimate_decoupling_stats(5, z1, z2, sched, 12, 400, SamplerConfig(seed=6))
    assert [(r.failures, r.block_end) for r in a.decay] == \
           [(r.failures, r.block_end) for r in b.decay]
    for row in a.decay:
        assert 0 <= row.ci_low <= row.p_hat <= row.ci_high <= 1


def test_trace_replay_is_bit_identical():
    z1, z2 = validate([0], 5), validate([2], 5)
    sched = CouplingSchedule.geometric(1, 10)
    cfg = SamplerConfig(seed=77, stream_id=4)
    a = run_one_sided_coupling(5, z1, z2, sched, 10, cfg)
    b = run_one_sided_coupling(5, z1, z2, sched, 10, cfg)
    assert a.walk1.steps == b.walk1.steps
    assert a.walk2.steps == b.walk2.steps
    assert a.record_dicts() == b.record_dicts()


def test_trace_serialization_and_equal_from():
    z1, z2 = validate([0], 5), validate([2], 5)
    sched = CouplingSchedule.geometric(1, 6)
    trace = run_one_sided_coupling(5, z1, z2, sched, 6, SamplerConfig(seed=8))
    dicts = trace.record_dicts()
    assert all(set(r) == {"l", "a_l", "success", "resamples"} for r in dicts)
    m_star = trace.final_equal_from()
    assert m_star is None or 0 <= m_star <= 6
    if m_star is not None:
        assert trace.walk1.steps[m_star:] == trace.walk2.steps[m_star:]
        if m_star > 0:
            assert trace.walk1.steps[m_star - 1] != trace.walk2.steps[m_star - 1]


def test_wilson_interval_basics():
    lo, hi = wilson_interval(0, 100)
    assert lo <= 1e-12 and hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 0) == (0.0, 1.0)
