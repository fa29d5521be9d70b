"""Brute-force reference implementations for the verification suite.

Everything here filters the full set of (2d)^n nearest-neighbour walks or
does equally naive work.  Deliberately slow and independent of the
optimized enumeration and sampling code paths.
"""

from __future__ import annotations

from itertools import product

from .lattice import Coords, direction_vectors, origin


def _walk_vertices(dimension: int, codes: tuple[int, ...]) -> list[Coords] | None:
    """Vertex list if the walk is self-avoiding, else None."""
    deltas = direction_vectors(dimension)
    cur = origin(dimension)
    seen = {cur}
    out = [cur]
    for c in codes:
        cur = tuple(a + b for a, b in zip(cur, deltas[c]))
        if cur in seen:
            return None
        seen.add(cur)
        out.append(cur)
    return out


def naive_saws(dimension: int, length: int) -> list[tuple[int, ...]]:
    """All self-avoiding walks of the given length, by filtering all walks."""
    out = []
    for codes in product(range(2 * dimension), repeat=length):
        if _walk_vertices(dimension, codes) is not None:
            out.append(codes)
    return out


def naive_count(dimension: int, length: int) -> int:
    return len(naive_saws(dimension, length))


def naive_count_ending_at(dimension: int, length: int, point: Coords) -> int:
    total = 0
    for codes in product(range(2 * dimension), repeat=length):
        verts = _walk_vertices(dimension, codes)
        if verts is not None and verts[-1] == point:
            total += 1
    return total


def naive_count_with_prefix(dimension: int, length: int,
                            prefix: tuple[int, ...]) -> int:
    total = 0
    for codes in product(range(2 * dimension), repeat=length):
        if codes[:len(prefix)] == prefix and _walk_vertices(dimension, codes) is not None:
            total += 1
    return total


def naive_count_two_sided(dimension: int, m: int, n: int,
                          neg_prefix: tuple[int, ...] = (),
                          pos_prefix: tuple[int, ...] = ()) -> int:
    """Pairs (w1, w2) in SAW_m x SAW_n meeting only at the origin."""
    total = 0
    for neg in naive_saws(dimension, m):
        if neg[:len(neg_prefix)] != neg_prefix:
            continue
        neg_verts = set(_walk_vertices(dimension, neg))
        for pos in naive_saws(dimension, n):
            if pos[:len(pos_prefix)] != pos_prefix:
                continue
            pos_verts = set(_walk_vertices(dimension, pos))
            if neg_verts & pos_verts == {origin(dimension)}:
                total += 1
    return total


def naive_escapes(dimension: int, tail: tuple[int, ...],
                  head: tuple[int, ...]) -> bool:
    """Escape test by expanding coordinates of the concatenated walk."""
    return _walk_vertices(dimension, head + tail) is not None
