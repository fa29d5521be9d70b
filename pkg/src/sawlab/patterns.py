"""Pattern-density statistics and scalar growth-rate estimators.

Exact mean densities come from one reduced enumeration pass: the first
step is fixed to +e1 and the pattern is replaced by the multiset of its
images under the symmetries that map each first step onto +e1, which
leaves the occurrence total over all of SAW_n unchanged.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .counting import (CountTable, _pack_params, count_saws, count_two_sided,
                       default_table)
from .lattice import Path, SignedPermutation, TwoSidedPath, validate
from .sampling import SamplerConfig, SawSampler, _coords_from_codes, _radix_powers


def _first_step_symmetry(dimension: int, code: int) -> SignedPermutation:
    """A lattice symmetry sending direction ``code`` to +e1."""
    axis, sign = code // 2, 1 - 2 * (code % 2)
    perm = list(range(dimension))
    perm[0], perm[axis] = perm[axis], perm[0]
    signs = [1] * dimension
    signs[0] = sign
    return SignedPermutation(tuple(perm), tuple(signs))


def _pattern_multiset(dimension: int, pattern: Path) -> Counter:
    """Images of the pattern under the 2d first-step symmetries."""
    out: Counter = Counter()
    for code in range(2 * dimension):
        g = _first_step_symmetry(dimension, code)
        table = g.code_table
        out[tuple(table[c] for c in pattern.steps)] += 1
    return out


def _occurrence_survey(dimension: int, n_max: int, pattern: Path):
    """Totals of pattern occurrences and walk counts for every n <= n_max,
    from a single reduced depth-first pass."""
    k = len(pattern)
    multiset = _pattern_multiset(dimension, pattern)
    width, origin_key, deltas = _pack_params(dimension, n_max)
    totals = [0] * (n_max + 1)
    counts = [0] * (n_max + 1)
    stack: list[int] = []

    def rec(head: int, depth: int, occ: int, occupied: set):
        counts[depth] += 1
        totals[depth] += occ
        if depth == n_max:
            return
        for code, delta in enumerate(deltas):
            nxt = head + delta
            if nxt not in occupied:
                stack.append(code)
                if depth + 1 >= k:
                    occ2 = occ + multiset.get(tuple(stack[-k:]), 0)
                else:
                    occ2 = occ
                occupied.add(nxt)
                rec(nxt, depth + 1, occ2, occupied)
                occupied.discard(nxt)
                stack.pop()

    first = origin_key + deltas[0]
    stack.append(0)
    occ0 = multiset.get((0,), 0) if k == 1 else 0
    rec(first, 1, occ0, {origin_key, first})
    return totals, counts


def exact_mean_density(dimension: int, n: int, pattern: Path, *,
                       table: CountTable | None = None) -> Fraction:
    """Exact E[pattern density over the uniform n-step walk]."""
    return exact_mean_density_grid(dimension, n, pattern, table=table)[n]


def exact_mean_density_grid(dimension: int, n_max: int, pattern: Path, *,
                            table: CountTable | None = None
                            ) -> dict[int, Fraction]:
    """Exact mean densities for every n in [max(k, 1), n_max]; one pass."""
    k = len(pattern)
    if k < 1:
        raise ValueError("pattern must have at least one step")
    if k > n_max:
        raise ValueError("pattern longer than the largest requested length")
    if pattern.dimension != dimension:
        raise ValueError("pattern dimension mismatch")
    table = table or default_table(dimension)
    totals, counts = _occurrence_survey(dimension, n_max, pattern)
    out = {}
    for n in range(k, n_max + 1):
        c_n = counts[n] * 2 * dimension
        cached = table.get("plain", n)
        if cached is None:
            table.put("plain", n, None, c_n)
        out[n] = Fraction(totals[n], n * counts[n] * 2 * dimension)
    return out


@dataclass
class DensityStats:
    n: int
    trials: int
    mean: float
    variance: float
    ci_low: float
    ci_high: float


def mc_density_stats(dimension: int, n: int, pattern: Path, trials: int,
                     cfg: SamplerConfig | None = None, *,
                     confidence_z: float = 1.959963984540054) -> DensityStats:
    """Sample mean/variance of the pattern density over seeded uniform draws."""
    if trials < 2:
        raise ValueError("need at least two trials")
    k = len(pattern)
    if k > n:
        raise ValueError("pattern longer than the walk")
    sampler = SawSampler(dimension, cfg)
    codes = sampler.uniform_batch(n, trials)
    target = np.frombuffer(pattern.steps, dtype=np.uint8)
    hits = np.zeros(trials, dtype=np.int32)
    for i in range(n - k + 1):
        window_ok = np.ones(trials, dtype=bool)
        for j in range(k):
            window_ok &= codes[:, i + j] == target[j]
        hits += window_ok
    density = hits / n
    mean = float(density.mean())
    variance = float(density.var(ddof=1))
    half = confidence_z * math.sqrt(variance / trials)
    return DensityStats(n, trials, mean, variance, mean - half, mean + half)


def two_sided_prefix_prob(dimension: int, m: int, n: int, pattern: Path, *,
                          table: CountTable | None = None,
                          workers: int = 1) -> Fraction:
    """P(two-sided walk with sides (m, n) starts with the pattern on its
    positive side), as an exact count ratio."""
    table = table or default_table(dimension)
    xi = TwoSidedPath(Path(dimension), pattern.re_anchored())
    hits = count_two_sided(dimension, m, n, xi, table=table, workers=workers)
    total = count_saws(dimension, m + n, table=table, workers=workers)
    return Fraction(hits, total)


@dataclass
class ProperPatternResult:
    """Outcome of the bounded proper-internal-pattern search."""

    status: str  # "yes" | "inconclusive"
    witness: Path | None = None
    nodes_visited: int = 0

    @property
    def is_proper(self) -> bool:
        return self.status == "yes"


def is_proper_internal_pattern(dimension: int, pattern: Path, *,
                               max_length: int | None = None,
                               max_nodes: int = 500_000) -> ProperPatternResult:
    """Search for a walk containing the pattern at least three times.

    Semi-decidable as bounded here: ``yes`` comes with a concrete witness,
    otherwise the result is inconclusive (budget exhausted), never ``no``.
    """
    k = len(pattern)
    if k < 1:
        raise ValueError("pattern must have at least one step")
    budget_length = max_length if max_length is not None else 3 * k + 8
    # Cheap candidate first: three copies laid end to end.
    try:
        tripled = validate(pattern.steps * 3, dimension)
    except Exception:
        tripled = None
    if tripled is not None and len(tripled) <= budget_length:
        return ProperPatternResult("yes", tripled)

    width, origin_key, deltas = _pack_params(dimension, budget_length)
    target = tuple(pattern.steps)
    stack: list[int] = []
    visited = [0]
    witness: list[bytes] = []

    def rec(head: int, depth: int, occ: int, occupied: set) -> bool:
        visited[0] += 1
        if visited[0] > max_nodes:
            return False
        if occ + (budget_length - depth) < 3:
            return False
        for code, delta in enumerate(deltas):
            nxt = head + delta
            if nxt in occupied:
                continue
            stack.append(code)
            occ2 = occ
            if depth + 1 >= k and tuple(stack[-k:]) == target:
                occ2 += 1
            if occ2 >= 3:
                witness.append(bytes(stack))
                stack.pop()
                return True
            if depth + 1 < budget_length:
                occupied.add(nxt)
                found = rec(nxt, depth + 1, occ2, occupied)
                occupied.discard(nxt)
                if found:
                    stack.pop()
                    return True
            stack.pop()
        return False

    found = rec(origin_key, 0, 0, {origin_key})
    if found:
        return ProperPatternResult("yes", Path(dimension, witness[0]),
                                   visited[0])
    return ProperPatternResult("inconclusive", None, visited[0])


@dataclass
class ScalarEstimates:
    """Monte Carlo growth-rate diagnostics from finite-proxy walks."""

    dimension: int
    horizon: int
    trials: int
    mu_escape: float
    mu_ratio: float
    msd_over_n: float
    avoid_fraction: float


def scalar_estimators(dimension: int, horizon: int, trials: int,
                      cfg: SamplerConfig | None = None, *,
                      table: CountTable | None = None,
                      mu_ratio_length: int | None = None,
                      chunk_rows: int = 8192) -> ScalarEstimates:
    """Three estimators: the connective constant via the escape identity
    (2d times the chance a walk started next to the origin avoids it), the
    ratio of the two largest cached exact counts, and the diffusive-scale
    mean-square displacement."""
    if horizon < 1 or trials < 1:
        raise ValueError("horizon and trials must be positive")
    table = table or default_table(dimension)
    sampler = SawSampler(dimension, cfg)
    target = np.zeros(dimension, dtype=np.int16)
    target[0] = -1
    avoided = 0
    msd_sum = 0.0
    remaining = trials
    while remaining > 0:
        rows = min(chunk_rows, remaining)
        codes = sampler.uniform_batch(horizon, rows)
        coords = _coords_from_codes(dimension, codes)
        visited = (coords == target).all(axis=2).any(axis=1)
        avoided += int(rows - visited.sum())
        ends = coords[:, -1, :].astype(np.int64)
        msd_sum += float((ends * ends).sum())
        remaining -= rows

    if mu_ratio_length is not None:
        n_star = mu_ratio_length
    else:
        n_star = table.largest_plain()
        if n_star is None or n_star < 2 or table.get("plain", n_star - 1) is None:
            n_star = min(7, max(2, horizon))
    c_hi = count_saws(dimension, n_star, table=table)
    c_lo = count_saws(dimension, n_star - 1, table=table)
    avoid_fraction = avoided / trials
    return ScalarEstimates(
        dimension=dimension,
        horizon=horizon,
        trials=trials,
        mu_escape=2 * dimension * avoid_fraction,
        mu_ratio=c_hi / c_lo,
        msd_over_n=msd_sum / trials / horizon,
        avoid_fraction=avoid_fraction,
    )


def escape_power_estimate(dimension: int, horizon: int, k: int, trials: int,
                          cfg: SamplerConfig | None = None, *,
                          table: CountTable | None = None,
                          chunk_rows: int = 8192) -> float:
    """Estimate of mu^k via c_k times the chance that an independent k-walk
    and a long walk share no vertex besides the origin."""
    if k < 1 or k > horizon:
        raise ValueError("k must be in [1, horizon]")
    table = table or default_table(dimension)
    sampler = SawSampler(dimension, cfg)
    radix = _radix_powers(dimension, horizon + k)
    disjoint = 0
    remaining = trials
    while remaining > 0:
        rows = min(chunk_rows, remaining)
        long_codes = sampler.uniform_batch(horizon, rows)
        short_codes = sampler.uniform_batch(k, rows)
        long_keys = _coords_from_codes(dimension, long_codes).astype(np.int64) @ radix
        short_keys = _coords_from_codes(dimension, short_codes).astype(np.int64) @ radix
        clash = (long_keys[:, 1:, None] == short_keys[:, None, 1:]).any(axis=(1, 2))
        disjoint += int(rows - clash.sum())
        remaining -= rows
    c_k = count_saws(dimension, k, table=table)
    return c_k * disjoint / trials


@dataclass
class DensityReportRow:
    n: int
    exact_mean: Fraction | None
    mc: DensityStats | None


@dataclass
class DensityReport:
    """Density-law summary for one pattern: exact means where enumerable,
    Monte Carlo statistics, and the finite two-sided reference probability."""

    dimension: int
    pattern_codes: bytes
    rows: list[DensityReportRow] = field(default_factory=list)
    reference_sides: tuple[int, int] | None = None
    reference_prob: Fraction | None = None

    def to_json_dict(self) -> dict:
        def frac(f):
            return None if f is None else {"num": str(f.numerator),
                                           "den": str(f.denominator)}
        return {
            "d": self.dimension,
            "pattern": list(self.pattern_codes),
            "reference_sides": self.reference_sides,
            "reference_prob": frac(self.reference_prob),
            "rows": [
                {
                    "n": r.n,
                    "exact_mean": frac(r.exact_mean),
                    "mc": None if r.mc is None else {
                        "trials": r.mc.trials,
                        "mean": r.mc.mean,
                        "variance": r.mc.variance,
                        "ci_low": r.mc.ci_low,
                        "ci_high": r.mc.ci_high,
                    },
                }
                for r in self.rows
            ],
        }

    def to_csv_rows(self) -> list[list]:
        header = ["n", "exact_mean_num", "exact_mean_den", "mc_mean",
                  "mc_var", "ci_lo", "ci_hi"]
        out = [header]
        for r in self.rows:
            num = r.exact_mean.numerator if r.exact_mean is not None else ""
            den = r.exact_mean.denominator if r.exact_mean is not None else ""
            if r.mc is None:
                out.append([r.n, num, den, "", "", "", ""])
            else:
                out.append([r.n, num, den, r.mc.mean, r.mc.variance,
                            r.mc.ci_low, r.mc.ci_high])
        return out


def build_density_report(dimension: int, pattern: Path, exact_lengths,
                         mc_lengths, trials: int,
                         cfg: SamplerConfig | None = None, *,
                         reference_sides: tuple[int, int] | None = None,
                         table: CountTable | None = None) -> DensityReport:
    table = table or default_table(dimension)
    report = DensityReport(dimension, pattern.steps)
    exact_lengths = sorted(set(exact_lengths))
    mc_lengths = sorted(set(mc_lengths))
    grid: dict[int, Fraction] = {}
    if exact_lengths:
        grid = exact_mean_density_grid(dimension, max(exact_lengths), pattern,
                                       table=table)
    for n in sorted(set(exact_lengths) | set(mc_lengths)):
        exact = grid.get(n) if n in exact_lengths else None
        mc = (mc_density_stats(dimension, n, pattern, trials, cfg)
              if n in mc_lengths else None)
        report.rows.append(DensityReportRow(n, exact, mc))
    if reference_sides is not None:
        m, n = reference_sides
        report.reference_sides = reference_sides
        report.reference_prob = two_sided_prefix_prob(dimension, m, n, pattern,
                                                      table=table)
    return report
