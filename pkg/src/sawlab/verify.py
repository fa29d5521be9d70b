"""Exact-identity verification suite.

Every check here is deterministic and exact (integer or rational
arithmetic, or residuals against pinned tolerances); the statistical
acceptance tests live in the test suite.  Each check compares the
optimized code path against an independent route: the brute-force
reference oracles, a second enumeration strategy, or a closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement

import numpy as np

from . import reference
from .counting import (CountTable, count_extensions, count_saws,
                       count_two_sided, default_table, endpoint_histogram,
                       enumerate_paths, prefix_histogram)
from .lattice import (Path, concat, escapes, lattice_symmetries,
                      pattern_density, validate)
from .errors import NotSelfAvoidingError
from .patterns import exact_mean_density_grid
from .spectral import build_escape_matrix, perron_fixed_point


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "ok  " if self.passed else "FAIL"
        return f"{status} - {self.name}" + (f": {self.detail}" if self.detail else "")


def _naive_cap(dimension: int, requested: int) -> int:
    """Largest length whose (2d)^n walk filter stays cheap."""
    cap = 0
    budget = 500_000
    total = 1
    while total * 2 * dimension <= budget:
        total *= 2 * dimension
        cap += 1
    return min(requested, cap)


def _equivalence_length_cap(dimension: int, requested: int) -> int:
    """Largest length whose all-pairs escape check stays around 10^6 pairs."""
    walks = 1
    cap = 0
    for n in range(1, requested + 1):
        walks += count_saws(dimension, n)
        if walks * walks > 4_000_000:
            break
        cap = n
    return cap


def check_closed_forms(dimension: int, table: CountTable) -> CheckResult:
    d2 = 2 * dimension
    expected = [1, d2, d2 * (d2 - 1), d2 * (d2 - 1) ** 2]
    got = [count_saws(dimension, n, table=table) for n in range(4)]
    return CheckResult(
        f"closed-form counts d={dimension} n<=3",
        got == expected,
        f"{got} vs {expected}",
    )


def check_counts_vs_naive(dimension: int, n_max: int,
                          table: CountTable) -> CheckResult:
    cap = _naive_cap(dimension, n_max)
    bad = []
    for n in range(cap + 1):
        fast = count_saws(dimension, n, table=table)
        slow = reference.naive_count(dimension, n)
        if fast != slow:
            bad.append((n, fast, slow))
    return CheckResult(
        f"DFS counts equal naive filter d={dimension} n<={cap}",
        not bad,
        str(bad) if bad else f"{cap + 1} lengths agree",
    )


def check_endpoint_sum(dimension: int, n_max: int,
                       table: CountTable) -> CheckResult:
    bad = []
    for n in range(n_max + 1):
        hist = endpoint_histogram(dimension, n, table=table)
        if sum(hist.values()) != count_saws(dimension, n, table=table):
            bad.append(n)
    return CheckResult(
        f"sum over endpoints equals c_n d={dimension} n<={n_max}",
        not bad,
        str(bad) if bad else "",
    )


def check_prefix_sum(dimension: int, n_max: int,
                     table: CountTable) -> CheckResult:
    bad = []
    for n in range(1, n_max + 1):
        for k in range(1, min(3, n) + 1):
            hist = prefix_histogram(dimension, n, k, table=table)
            if sum(hist.values()) != count_saws(dimension, n, table=table):
                bad.append((n, k))
    return CheckResult(
        f"sum over k-prefixes equals c_n d={dimension} n<={n_max}",
        not bad,
        str(bad) if bad else "",
    )


def check_prefix_identity(dimension: int, n_max: int, prefix_max: int,
                          table: CountTable) -> CheckResult:
    """c_n(zeta) equals the escaper count from a separate suffix search."""
    bad = 0
    checked = 0
    for k in range(1, min(prefix_max, n_max) + 1):
        for codes in enumerate_paths(dimension, k):
            zeta = Path(dimension, codes)
            by_prefix = count_extensions(dimension, n_max, zeta, table=table)
            escapers = sum(
                1 for _ in enumerate_paths(dimension, n_max, prefix=zeta)
            )
            checked += 1
            if by_prefix != escapers:
                bad += 1
    return CheckResult(
        f"prefix counts equal escaper counts d={dimension} n={n_max} k<={prefix_max}",
        bad == 0,
        f"{checked} prefixes checked",
    )


def _forced_prefix_suffix_sets(dimension: int, m_max: int,
                               zeta: Path) -> dict[int, set[bytes]]:
    """Direct route: walk SAW_m from the origin with the first k steps
    forced to the prefix, collecting shifted suffixes per length.

    Deliberately tuple-based and origin-rooted, independent of the packed
    escaper search it is compared against.
    """
    from .lattice import direction_vectors

    deltas = direction_vectors(dimension)
    k = len(zeta)
    forced = zeta.steps
    out: dict[int, set[bytes]] = {m: set() for m in range(k, m_max + 1)}
    stack: list[int] = []

    def rec(pos, depth, seen):
        if depth >= k:
            out[depth].add(bytes(stack[k:]))
        if depth == m_max:
            return
        codes = (forced[depth],) if depth < k else range(2 * dimension)
        for code in codes:
            nxt = tuple(a + b for a, b in zip(pos, deltas[code]))
            if nxt in seen:
                continue
            seen.add(nxt)
            stack.append(code)
            rec(nxt, depth + 1, seen)
            stack.pop()
            seen.discard(nxt)

    start = (0,) * dimension
    rec(start, 0, {start})
    return out


def check_dmp_two_ways(dimension: int, m_max: int, prefix_max: int,
                       table: CountTable, *,
                       validate_cap: int = 20000) -> CheckResult:
    """Conditional suffix law two ways, as exact rationals.

    Both routes give uniform laws, so the laws coincide iff the suffix
    supports coincide and the atom masses 1/count agree as fractions.
    Route one forces the prefix from the origin; route two enumerates
    escapers from the prefix tip with the prefix pre-blocked.  Small
    supports are additionally re-validated step by step.
    """
    mism = []
    n_checked = 0
    for k in range(1, min(prefix_max, m_max) + 1):
        for codes in enumerate_paths(dimension, k):
            zeta = Path(dimension, codes)
            direct = _forced_prefix_suffix_sets(dimension, m_max, zeta)
            for m in range(k, m_max + 1):
                escaper = {full[k:] for full in
                           enumerate_paths(dimension, m, prefix=zeta)}
                n_checked += 1
                if direct[m] != escaper:
                    mism.append((k, zeta.steps, m))
                    continue
                if escaper and Fraction(1, len(direct[m])) != Fraction(1, len(escaper)):
                    mism.append((k, zeta.steps, m))
                    continue
                if len(escaper) <= validate_cap:
                    for suffix in escaper:
                        validate(codes + suffix, dimension)
    return CheckResult(
        f"conditional suffix law two ways d={dimension} m<={m_max} k<={prefix_max}",
        not mism,
        f"{n_checked} (prefix, length) pairs" if not mism else str(mism[:3]),
    )


def check_two_sided_bijection(dimension: int, n_max: int,
                              table: CountTable) -> CheckResult:
    bad = []
    checked = 0
    for m in range(0, min(3, n_max) + 1):
        for n in range(m, min(3, n_max - m) + 1):
            two = count_two_sided(dimension, m, n, table=table)
            flat = count_saws(dimension, m + n, table=table)
            checked += 1
            if two != flat:
                bad.append((m, n, two, flat))
    return CheckResult(
        f"two-sided counts match folded one-sided counts d={dimension}",
        not bad,
        str(bad) if bad else f"{checked} (m, n) pairs",
    )


def check_nonintersection(dimension: int, n_max: int,
                          table: CountTable) -> CheckResult:
    rows = []
    ok = True
    for m in range(1, n_max // 2 + 1):
        ratio = Fraction(count_saws(dimension, 2 * m, table=table),
                         count_saws(dimension, m, table=table) ** 2)
        rows.append(f"m={m}:{float(ratio):.4f}")
        if dimension >= 5 and not Fraction(1, 2) < ratio <= 1:
            ok = False
    return CheckResult(
        f"non-intersection ratios c_2m/c_m^2 d={dimension}",
        ok,
        " ".join(rows),
    )


def check_submultiplicativity(dimension: int, n_max: int,
                              table: CountTable) -> CheckResult:
    bad = []
    counts = {n: count_saws(dimension, n, table=table) for n in range(n_max + 1)}
    for a, b in combinations_with_replacement(range(n_max + 1), 2):
        if a + b <= n_max and counts[a + b] > counts[a] * counts[b]:
            bad.append((a, b))
    return CheckResult(
        f"submultiplicativity d={dimension} n<={n_max}",
        not bad,
        str(bad) if bad else "",
    )


def check_escape_concat_equivalence(dimension: int, length_max: int) -> CheckResult:
    """escapes(w2, w1) iff concat(w1, w2) succeeds, exhaustively."""
    walks = []
    for n in range(length_max + 1):
        walks.extend(Path(dimension, codes) for codes in
                     enumerate_paths(dimension, n))
    bad = 0
    for w1 in walks:
        for w2 in walks:
            esc = escapes(w2, w1)
            try:
                concat(w1, w2)
                joined = True
            except NotSelfAvoidingError:
                joined = False
            if esc != joined:
                bad += 1
    return CheckResult(
        f"escape/concat equivalence d={dimension} lengths<={length_max}",
        bad == 0,
        f"{len(walks) ** 2} pairs",
    )


def check_fixed_points(dimension: int, n_values, table: CountTable, *,
                       residual_tol: float = 1e-10,
                       agreement_tol: float = 1e-8) -> CheckResult:
    problems = []
    for n in n_values:
        matrix = build_escape_matrix(dimension, n)
        result = perron_fixed_point(matrix, tol=1e-12, seed=17)
        if result.residual > residual_tol:
            problems.append(f"n={n} residual {result.residual:.2e}")
        if result.starts_spread > agreement_tol:
            problems.append(f"n={n} spread {result.starts_spread:.2e}")
        if n == 1:
            uniform = 1.0 / (2 * dimension)
            if abs(result.eigenvalue - (2 * dimension - 1)) > 1e-9:
                problems.append(f"Z_1 = {result.eigenvalue}")
            if np.abs(result.measure.values - uniform).max() > 1e-9:
                problems.append("P_1 not uniform")
        # symmetry invariance over the full group
        index = {codes: i for i, codes in enumerate(matrix.paths)}
        full = result.full_vector()
        worst = 0.0
        for g in lattice_symmetries(dimension):
            t = g.code_table
            for codes, i in index.items():
                j = index[bytes(t[c] for c in codes)]
                worst = max(worst, abs(full[i] - full[j]))
        if worst > agreement_tol:
            problems.append(f"n={n} symmetry deviation {worst:.2e}")
    return CheckResult(
        f"fixed points d={dimension} n in {list(n_values)}",
        not problems,
        "; ".join(problems) if problems else "residual/uniqueness/symmetry ok",
    )


def check_pattern_means(dimension: int, n_max: int,
                        table: CountTable) -> CheckResult:
    """Single-step mean is exactly 1/(2d); survey equals enumeration mean."""
    step = validate([0], dimension)
    grid = exact_mean_density_grid(dimension, n_max, step, table=table)
    problems = []
    for n, mean in grid.items():
        if mean != Fraction(1, 2 * dimension):
            problems.append(f"n={n}: {mean}")
    cross_max = _naive_cap(dimension, n_max)
    zeta = validate([0, 2], dimension) if dimension >= 2 else step
    grid2 = exact_mean_density_grid(dimension, max(cross_max, len(zeta)),
                                    zeta, table=table)
    for n in range(len(zeta), cross_max + 1):
        total = Fraction(0)
        paths = enumerate_paths(dimension, n)
        for codes in paths:
            total += pattern_density(Path(dimension, codes), zeta)
        if grid2[n] != total / len(paths):
            problems.append(f"two-route mismatch at n={n}")
    return CheckResult(
        f"exact pattern means d={dimension} n<={n_max}",
        not problems,
        "; ".join(problems) if problems else "",
    )


def run_verify(dimension: int, n_max: int, *,
               table: CountTable | None = None,
               workers: int = 1) -> list[CheckResult]:
    """The full exact-identity suite at the given scale."""
    table = table or default_table(dimension)
    prefix_max = min(3, n_max)
    fp_lengths = [n for n in range(1, min(n_max, 5) + 1)
                  if count_saws(dimension, n, table=table) <= 2000]
    checks = [
        check_closed_forms(dimension, table),
        check_counts_vs_naive(dimension, n_max, table),
        check_endpoint_sum(dimension, min(n_max, 6), table),
        check_prefix_sum(dimension, min(n_max, 6), table),
        check_prefix_identity(dimension, min(n_max, 6), prefix_max, table),
        check_dmp_two_ways(dimension, min(n_max, 6), prefix_max, table),
        check_two_sided_bijection(dimension, min(n_max, 6), table),
        check_nonintersection(dimension, n_max, table),
        check_submultiplicativity(dimension, n_max, table),
        check_escape_concat_equivalence(
            dimension, _equivalence_length_cap(dimension, min(4, n_max))),
        check_fixed_points(dimension, fp_lengths, table),
        check_pattern_means(dimension, min(n_max, 7), table),
    ]
    return checks
