"""Exact backtracking enumeration and counting of self-avoiding walks.

The depth-first search keeps its occupancy set as packed integers: each
coordinate is offset into [0, 2L] and given a fixed bit field, so a vertex
is one int and a step is one addition.  Packing is lossless because every
reachable coordinate is bounded by the walk extent L.

Counts are exact Python integers.  Optional node budgets raise
``BudgetExceededError``; optional checkpoints save partial sums per prefix
task so an aborted count can resume.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BudgetExceededError
from .lattice import Coords, LatticePoint, Path, TwoSidedPath, empty_two_sided, origin

_UNLIMITED = 1 << 62


class CountTable:
    """Exact count cache keyed by (kind, n, condition key).

    ``kind`` is one of ``plain``, ``end``, ``prefix``, ``two_sided``.  An
    optional store (anything with ``get``/``put`` over the same keys) makes
    the table read-through/write-through.
    """

    def __init__(self, dimension: int, store=None):
        self.dimension = dimension
        self.store = store
        self._entries: dict[tuple, int] = {}
        self._complete_histograms: set[tuple[str, int]] = set()

    def get(self, kind: str, n: int, key=None) -> int | None:
        k = (kind, n, key)
        if k in self._entries:
            return self._entries[k]
        if self.store is not None:
            value = self.store.get(self.dimension, kind, n, key)
            if value is not None:
                self._entries[k] = value
                return value
        if kind == "end" and ("end", n) in self._complete_histograms:
            return 0
        return None

    def put(self, kind: str, n: int, key, value: int) -> None:
        self._entries[(kind, n, key)] = value
        if self.store is not None:
            self.store.put(self.dimension, kind, n, key, value)

    def mark_histogram_complete(self, kind: str, n: int) -> None:
        self._complete_histograms.add((kind, n))

    def plain_counts(self) -> dict[int, int]:
        return {
            n: v for (kind, n, _), v in self._entries.items() if kind == "plain"
        }

    def largest_plain(self) -> int | None:
        plain = self.plain_counts()
        return max(plain) if plain else None


_default_tables: dict[int, CountTable] = {}


def default_table(dimension: int) -> CountTable:
    """Process-wide shared table (exact values, so sharing is safe)."""
    if dimension not in _default_tables:
        _default_tables[dimension] = CountTable(dimension)
    return _default_tables[dimension]


# ---------------------------------------------------------------------------
# packed-coordinate machinery


def _pack_params(dimension: int, extent: int):
    """Bit layout for coordinates in [-extent, extent]."""
    width = max(2, (2 * extent + 1).bit_length())
    origin_key = 0
    for axis in range(dimension):
        origin_key |= extent << (axis * width)
    deltas = []
    for code in range(2 * dimension):
        axis, sign = code // 2, 1 - 2 * (code % 2)
        deltas.append(sign * (1 << (axis * width)))
    return width, origin_key, tuple(deltas)


def _pack(coords: Coords, width: int, extent: int) -> int:
    key = 0
    for axis, c in enumerate(coords):
        key |= (c + extent) << (axis * width)
    return key


def _unpack(key: int, dimension: int, width: int, extent: int) -> Coords:
    mask = (1 << width) - 1
    return tuple(((key >> (axis * width)) & mask) - extent for axis in range(dimension))


# ---------------------------------------------------------------------------
# core depth-first loops


def _count_below(head: int, depth: int, occupied: set, deltas, budget: list) -> int:
    if depth == 0:
        return 1
    total = 0
    nxt_depth = depth - 1
    for delta in deltas:
        nxt = head + delta
        if nxt not in occupied:
            budget[0] -= 1
            if budget[0] < 0:
                raise BudgetExceededError(budget[1])
            if nxt_depth == 0:
                total += 1
            else:
                occupied.add(nxt)
                total += _count_below(nxt, nxt_depth, occupied, deltas, budget)
                occupied.discard(nxt)
    return total


def _exists_below(head: int, depth: int, occupied: set, deltas) -> bool:
    if depth == 0:
        return True
    for delta in deltas:
        nxt = head + delta
        if nxt not in occupied:
            if depth == 1:
                return True
            occupied.add(nxt)
            found = _exists_below(nxt, depth - 1, occupied, deltas)
            occupied.discard(nxt)
            if found:
                return True
    return False


def _leaves_by_endpoint(head: int, depth: int, occupied: set, deltas,
                        hist: dict, budget: list) -> None:
    if depth == 0:
        hist[head] = hist.get(head, 0) + 1
        return
    for delta in deltas:
        nxt = head + delta
        if nxt not in occupied:
            budget[0] -= 1
            if budget[0] < 0:
                raise BudgetExceededError(budget[1])
            if depth == 1:
                hist[nxt] = hist.get(nxt, 0) + 1
            else:
                occupied.add(nxt)
                _leaves_by_endpoint(nxt, depth - 1, occupied, deltas, hist, budget)
                occupied.discard(nxt)
    return


def _enumerate_below(head: int, depth: int, occupied: set, deltas,
                     stack: bytearray, acc: list) -> None:
    if depth == 0:
        acc.append(bytes(stack))
        return
    for code, delta in enumerate(deltas):
        nxt = head + delta
        if nxt not in occupied:
            stack.append(code)
            if depth == 1:
                acc.append(bytes(stack))
            else:
                occupied.add(nxt)
                _enumerate_below(nxt, depth - 1, occupied, deltas, stack, acc)
                occupied.discard(nxt)
            stack.pop()
    return


# ---------------------------------------------------------------------------
# prefix tasks, parallel reduction, checkpoints


def _prefix_tasks(head: int, depth: int, occupied: set, deltas, split: int):
    """All extendable prefixes of length ``split``; each task is
    (added vertex keys, new head, remaining depth)."""
    tasks = []

    def rec(h, taken, left):
        if left == 0:
            tasks.append((tuple(taken), h, depth - split))
            return
        for delta in deltas:
            nxt = h + delta
            if nxt not in occupied:
                occupied.add(nxt)
                taken.append(nxt)
                rec(nxt, taken, left - 1)
                taken.pop()
                occupied.discard(nxt)

    rec(head, [], split)
    return tasks


def _count_task(payload) -> int:
    """Worker entry point; payload carries only ints (picklable)."""
    deltas, blocked, head, depth, pos_head, pos_depth, node_budget = payload
    occupied = set(blocked)
    budget = [node_budget, node_budget]
    if pos_head is None:
        return _count_below(head, depth, occupied, deltas, budget)
    return _count_two_sided_below(head, depth, pos_head, pos_depth,
                                  occupied, deltas, budget)


def _count_two_sided_below(neg_head: int, neg_depth: int, pos_head: int,
                           pos_depth: int, occupied: set, deltas,
                           budget: list) -> int:
    if neg_depth == 0:
        return _count_below(pos_head, pos_depth, occupied, deltas, budget)
    total = 0
    for delta in deltas:
        nxt = neg_head + delta
        if nxt not in occupied:
            budget[0] -= 1
            if budget[0] < 0:
                raise BudgetExceededError(budget[1])
            occupied.add(nxt)
            total += _count_two_sided_below(nxt, neg_depth - 1, pos_head,
                                            pos_depth, occupied, deltas, budget)
            occupied.discard(nxt)
    return total


class _Checkpoint:
    """Partial sums per prefix task, written atomically."""

    def __init__(self, path: str, signature: str, interval: int = 32):
        self.path = path
        self.signature = signature
        self.interval = interval
        self.done: dict[int, int] = {}
        self._pending = 0
        if os.path.exists(path):
            try:
                with open(path, encoding="utf-8") as fh:
                    data = json.load(fh)
                if data.get("signature") == signature:
                    self.done = {int(k): int(v) for k, v in data["done"].items()}
            except (OSError, ValueError, KeyError):
                pass

    def record(self, index: int, value: int) -> None:
        self.done[index] = value
        self._pending += 1
        if self._pending >= self.interval:
            self.flush()

    def flush(self) -> None:
        tmp = self.path + ".tmp"
        payload = {
            "signature": self.signature,
            "done": {str(k): str(v) for k, v in self.done.items()},
        }
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
        os.replace(tmp, self.path)
        self._pending = 0

    def finish(self) -> None:
        try:
            os.remove(self.path)
        except OSError:
            pass


def _signature(*parts) -> str:
    return hashlib.sha256(repr(parts).encode()).hexdigest()[:16]


def _run_engine(deltas, blocked: frozenset, head: int, depth: int, *,
                pos_head: int | None = None, pos_depth: int = 0,
                workers: int = 1, node_budget: int | None = None,
                checkpoint_path: str | None = None, split_depth: int = 3,
                signature: str = "") -> int:
    """Count completions of a search root, optionally split into prefix tasks."""
    budget_total = node_budget if node_budget is not None else _UNLIMITED
    if workers <= 1 and checkpoint_path is None:
        occupied = set(blocked)
        budget = [budget_total, budget_total]
        if pos_head is None:
            return _count_below(head, depth, occupied, deltas, budget)
        return _count_two_sided_below(head, depth, pos_head, pos_depth,
                                      occupied, deltas, budget)

    split = min(split_depth, depth)
    occupied = set(blocked)
    tasks = _prefix_tasks(head, depth if pos_head is None else depth, occupied,
                          deltas, split) if split > 0 else []
    if split == 0:
        tasks = [((), head, depth)]
    checkpoint = (_Checkpoint(checkpoint_path, signature)
                  if checkpoint_path is not None else None)
    per_task_budget = (budget_total if budget_total == _UNLIMITED
                       else max(1, budget_total // max(1, len(tasks))))
    payloads = []
    pending_idx = []
    for idx, (taken, task_head, remaining) in enumerate(tasks):
        if checkpoint is not None and idx in checkpoint.done:
            continue
        payloads.append((deltas, tuple(blocked) + taken, task_head, remaining,
                         pos_head, pos_depth, per_task_budget))
        pending_idx.append(idx)

    results: dict[int, int] = dict(checkpoint.done) if checkpoint else {}
    try:
        if workers > 1 and payloads:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for idx, value in zip(pending_idx, pool.map(_count_task, payloads,
                                                            chunksize=16)):
                    results[idx] = value
                    if checkpoint is not None:
                        checkpoint.record(idx, value)
        else:
            for idx, payload in zip(pending_idx, payloads):
                results[idx] = _count_task(payload)
                if checkpoint is not None:
                    checkpoint.record(idx, value=results[idx])
    except BudgetExceededError:
        if checkpoint is not None:
            checkpoint.flush()
        raise BudgetExceededError(budget_total, checkpoint_path) from None
    total = sum(results[i] for i in sorted(results))
    if checkpoint is not None:
        checkpoint.finish()
    return total


# ---------------------------------------------------------------------------
# public counting operations


def count_saws(dimension: int, n: int, *, table: CountTable | None = None,
               workers: int = 1, node_budget: int | None = None,
               checkpoint_path: str | None = None, split_depth: int = 3) -> int:
    """Exact number of n-step self-avoiding walks from the origin.

    The first step is fixed to +e1 and the result multiplied by 2d; every
    condition-free count has that symmetry.
    """
    if n < 0:
        raise ValueError("length must be nonnegative")
    table = table or default_table(dimension)
    cached = table.get("plain", n)
    if cached is not None:
        return cached
    if n == 0:
        value = 1
    else:
        width, origin_key, deltas = _pack_params(dimension, n)
        first = origin_key + deltas[0]
        blocked = frozenset((origin_key, first))
        value = 2 * dimension * _run_engine(
            deltas, blocked, first, n - 1,
            workers=workers, node_budget=node_budget,
            checkpoint_path=checkpoint_path, split_depth=split_depth,
            signature=_signature(dimension, "plain", n, split_depth),
        )
    table.put("plain", n, None, value)
    return value


def endpoint_histogram(dimension: int, n: int, *,
                       table: CountTable | None = None,
                       node_budget: int | None = None) -> dict[Coords, int]:
    """Counts of n-step walks grouped by endpoint, from one full pass."""
    table = table or default_table(dimension)
    width, origin_key, deltas = _pack_params(dimension, n)
    hist: dict[int, int] = {}
    if n == 0:
        hist[origin_key] = 1
    else:
        limit = node_budget if node_budget is not None else _UNLIMITED
        _leaves_by_endpoint(origin_key, n, {origin_key}, deltas, hist,
                            [limit, limit])
    out = {}
    for key, value in hist.items():
        coords = _unpack(key, dimension, width, n)
        out[coords] = value
        table.put("end", n, coords, value)
    table.mark_histogram_complete("end", n)
    return out


def count_ending_at(dimension: int, n: int, point: Coords | LatticePoint, *,
                    table: CountTable | None = None,
                    node_budget: int | None = None) -> int:
    """Exact number of n-step walks ending at ``point``."""
    coords = point.coords if isinstance(point, LatticePoint) else tuple(point)
    if len(coords) != dimension:
        raise ValueError("endpoint dimension mismatch")
    table = table or default_table(dimension)
    cached = table.get("end", n, coords)
    if cached is not None:
        return cached
    norm = sum(abs(c) for c in coords)
    if norm > n or (norm - n) % 2 != 0:
        table.put("end", n, coords, 0)
        return 0
    endpoint_histogram(dimension, n, table=table, node_budget=node_budget)
    return table.get("end", n, coords) or 0


def count_extensions(dimension: int, n: int, prefix: Path, *,
                     table: CountTable | None = None, workers: int = 1,
                     node_budget: int | None = None,
                     checkpoint_path: str | None = None,
                     split_depth: int = 3) -> int:
    """Number of n-step walks starting with ``prefix``.

    Equals the number of (n-k)-step walks escaping the prefix, counted by a
    search from the prefix tip with the prefix occupied.
    """
    k = len(prefix)
    if k > n:
        raise ValueError("prefix longer than requested length")
    if prefix.dimension != dimension:
        raise ValueError("prefix dimension mismatch")
    table = table or default_table(dimension)
    if k == 0:
        return count_saws(dimension, n, table=table, workers=workers,
                          node_budget=node_budget,
                          checkpoint_path=checkpoint_path)
    cached = table.get("prefix", n, prefix.steps)
    if cached is not None:
        return cached
    if k == n:
        value = 1
    else:
        anchored = prefix.re_anchored()
        width, origin_key, deltas = _pack_params(dimension, n)
        blocked = frozenset(_pack(v, width, n) for v in anchored.vertices)
        head = _pack(anchored.end, width, n)
        value = _run_engine(
            deltas, blocked, head, n - k,
            workers=workers, node_budget=node_budget,
            checkpoint_path=checkpoint_path, split_depth=split_depth,
            signature=_signature(dimension, "prefix", n, prefix.steps, split_depth),
        )
    table.put("prefix", n, prefix.steps, value)
    return value


def has_extension(dimension: int, extra_steps: int, prefix: Path) -> bool:
    """True iff some ``extra_steps``-step continuation escapes ``prefix``.

    Cheap when continuations are plentiful and when the prefix is trapped
    (the dead search tree is small in both cases).
    """
    if extra_steps <= 0:
        return True
    anchored = prefix.re_anchored()
    extent = len(prefix) + extra_steps
    width, origin_key, deltas = _pack_params(dimension, extent)
    occupied = {_pack(v, width, extent) for v in anchored.vertices}
    head = _pack(anchored.end, width, extent)
    return _exists_below(head, extra_steps, occupied, deltas)


def count_two_sided(dimension: int, m: int, n: int,
                    xi: TwoSidedPath | None = None, *,
                    table: CountTable | None = None, workers: int = 1,
                    node_budget: int | None = None,
                    checkpoint_path: str | None = None,
                    split_depth: int = 3) -> int:
    """Number of two-sided walks with side lengths (m, n) extending ``xi``.

    A two-sided walk is a pair in SAW_m x SAW_n whose sides meet only at
    the origin; with empty ``xi`` the count equals c_{m+n} through the
    fold-out bijection.
    """
    if xi is None:
        xi = empty_two_sided(dimension)
    if xi.dimension != dimension:
        raise ValueError("condition dimension mismatch")
    if xi.neg_length > m or xi.pos_length > n:
        raise ValueError("condition does not fit inside the requested lengths")
    table = table or default_table(dimension)
    key = (m, n, xi.neg.steps, xi.pos.steps)
    cached = table.get("two_sided", m + n, key)
    if cached is not None:
        return cached
    extent = m + n
    width, origin_key, deltas = _pack_params(dimension, extent)
    blocked = frozenset(_pack(v, width, extent) for v in xi.vertex_set)
    neg_head = _pack(xi.neg.end, width, extent)
    pos_head = _pack(xi.pos.end, width, extent)
    value = _run_engine(
        deltas, blocked, neg_head, m - xi.neg_length,
        pos_head=pos_head, pos_depth=n - xi.pos_length,
        workers=workers, node_budget=node_budget,
        checkpoint_path=checkpoint_path, split_depth=split_depth,
        signature=_signature(dimension, "two_sided", m, n, key, split_depth),
    )
    table.put("two_sided", m + n, key, value)
    return value


def enumerate_paths(dimension: int, n: int, prefix: Path | None = None) -> list[bytes]:
    """All n-step walks (optionally with a forced prefix) as step codes.

    Canonical order: lexicographic in direction codes, which is the
    depth-first visiting order.
    """
    if prefix is not None and len(prefix) > n:
        raise ValueError("prefix longer than requested length")
    width, origin_key, deltas = _pack_params(dimension, n)
    if prefix is None:
        occupied = {origin_key}
        head = origin_key
        stack = bytearray()
        depth = n
    else:
        anchored = prefix.re_anchored()
        occupied = {_pack(v, width, n) for v in anchored.vertices}
        head = _pack(anchored.end, width, n)
        stack = bytearray(anchored.steps)
        depth = n - len(prefix)
    acc: list[bytes] = []
    _enumerate_below(head, depth, occupied, deltas, stack, acc)
    return acc


def prefix_histogram(dimension: int, m: int, k: int, *,
                     table: CountTable | None = None, workers: int = 1,
                     node_budget: int | None = None) -> dict[bytes, int]:
    """c_m(zeta) for every zeta in SAW_k, as a codes -> count map."""
    if k > m:
        raise ValueError("prefix length exceeds walk length")
    table = table or default_table(dimension)
    out = {}
    for codes in enumerate_paths(dimension, k):
        prefix = Path(dimension, codes)
        out[codes] = count_extensions(dimension, m, prefix, table=table,
                                      workers=workers, node_budget=node_budget)
    return out


def truncated_two_point(dimension: int, point: Coords | LatticePoint,
                        max_length: int, mu_hat: float, *,
                        table: CountTable | None = None,
                        node_budget: int | None = None) -> float:
    """Partial two-point sum: sum of c_n(x) * mu_hat^-n for n <= max_length."""
    if mu_hat <= 0:
        raise ValueError("mu_hat must be positive")
    coords = point.coords if isinstance(point, LatticePoint) else tuple(point)
    table = table or default_table(dimension)
    total = 0.0
    for n in range(max_length + 1):
        c = count_ending_at(dimension, n, coords, table=table,
                            node_budget=node_budget)
        if c:
            total += c * mu_hat ** (-n)
    return total


@dataclass
class AsymptoticRow:
    n: int
    count: int
    ratio: Fraction | None
    root: float | None
    amplitude: Fraction | None


@dataclass
class AsymptoticTable:
    dimension: int
    rows: list[AsymptoticRow] = field(default_factory=list)
    nonintersection: list[tuple[int, Fraction]] = field(default_factory=list)


def asymptotic_table(dimension: int, n_max: int, *,
                     table: CountTable | None = None, workers: int = 1,
                     node_budget: int | None = None) -> AsymptoticTable:
    """Growth-rate summaries: counts, successive ratios, n-th roots, the
    amplitude proxy c_n / ratio^n, and the non-intersection ratios
    c_{2m} / c_m^2 for 2m <= n_max."""
    table = table or default_table(dimension)
    counts = [count_saws(dimension, n, table=table, workers=workers,
                         node_budget=node_budget) for n in range(n_max + 1)]
    out = AsymptoticTable(dimension)
    for n, c in enumerate(counts):
        ratio = Fraction(c, counts[n - 1]) if n >= 1 else None
        root = float(c) ** (1.0 / n) if n >= 1 else None
        amplitude = (Fraction(c) / ratio ** n) if n >= 1 else None
        out.rows.append(AsymptoticRow(n, c, ratio, root, amplitude))
    for m in range(1, n_max // 2 + 1):
        out.nonintersection.append(
            (m, Fraction(counts[2 * m], counts[m] ** 2))
        )
    return out
