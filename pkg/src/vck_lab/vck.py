"""Shattering search and exact higher-arity VC dimension with certificates.

A (k+1)-ary function f threshold-shatters a k-dimensional box A1 x ... x Ak
at (r, s) when for every subset S of the box grid some witness vertex b in
the distinguished coordinate has f <= r on S and f >= s off S.  The search
iterates box size d upward, enumerating boxes lexicographically; witnesses
are located through per-vertex trace bitmaps over the grid, so the
subset-cover test is set membership over integer masks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import defaults
from .errors import InvalidArgumentError, ResourceLimitError
from .space import MeasuredFunction, fiber
from .serialize import parse_fraction


@dataclass(frozen=True)
class Box:
    """Per searched coordinate, the vertex subset forming one box side."""

    subsets: tuple

    def __post_init__(self):
        subs = tuple(tuple(int(v) for v in side) for side in self.subsets)
        for side in subs:
            if not side:
                raise InvalidArgumentError("box sides must be non-empty")
            if len(set(side)) != len(side):
                raise InvalidArgumentError(f"duplicate vertices in box side {side}")
        object.__setattr__(self, "subsets", subs)

    @property
    def grid_size(self) -> int:
        return math.prod(len(side) for side in self.subsets)

    def grid(self) -> list:
        """Row-major list of grid points (tuples of vertices)."""
        return list(itertools.product(*self.subsets))


@dataclass(frozen=True)
class ShatteringCertificate:
    """Witness map proving a box is (r, s)-shattered.

    ``witnesses`` maps each subset of the box grid, encoded as a bitmask in
    row-major grid order, to a vertex of the distinguished coordinate whose
    values are <= r on the subset and >= s on its complement.
    """

    box: Box
    distinguished: int
    r: float
    s: float
    witnesses: dict = field(repr=False)

    @property
    def dimension(self) -> int:
        return len(self.box.subsets[0])

    def to_doc(self) -> dict:
        grid = self.box.grid()
        entries = []
        for mask in sorted(self.witnesses):
            points = [list(grid[i]) for i in range(len(grid)) if mask >> i & 1]
            entries.append({"subset": points, "witness": self.witnesses[mask]})
        return {"box": [list(side) for side in self.box.subsets],
                "distinguished": self.distinguished,
                "r": Fraction(self.r), "s": Fraction(self.s),
                "witnesses": entries}

    @staticmethod
    def from_doc(doc) -> "ShatteringCertificate":
        box = Box(tuple(tuple(side) for side in doc["box"]))
        grid_index = {tuple(pt): i for i, pt in enumerate(box.grid())}
        witnesses = {}
        for rec in doc["witnesses"]:
            mask = 0
            for pt in rec["subset"]:
                mask |= 1 << grid_index[tuple(pt)]
            witnesses[mask] = int(rec["witness"])
        return ShatteringCertificate(box, int(doc["distinguished"]),
                                     float(parse_fraction(doc["r"])),
                                     float(parse_fraction(doc["s"])), witnesses)


@dataclass(frozen=True)
class VcResult:
    dimension: int
    certificate: ShatteringCertificate | None
    complete: bool = True


@dataclass(frozen=True)
class VcProfile:
    """Certified dimension per (r, s) threshold pair, dyadic grid."""

    entries: dict  # (Fraction r, Fraction s) -> VcResult

    def dimension(self, r, s) -> int:
        return self.entries[(Fraction(r), Fraction(s))].dimension


def _box_positions(arity: int, distinguished: int) -> list:
    if not 0 <= distinguished < arity:
        raise InvalidArgumentError(f"distinguished coordinate {distinguished} out of range")
    return [p for p in range(arity) if p != distinguished]


def _grid_value_table(f: MeasuredFunction, box: Box, distinguished: int) -> np.ndarray:
    """(grid_size, witness_count) array of f over box grid x witness vertex."""
    positions = _box_positions(f.arity, distinguished)
    if len(box.subsets) != len(positions):
        raise InvalidArgumentError(
            f"box has {len(box.subsets)} sides for {len(positions)} searched coordinates")
    for side, pos in zip(box.subsets, positions):
        limit = f.shape[pos]
        if any(not 0 <= v < limit for v in side):
            raise InvalidArgumentError(f"box side {side} out of range for coordinate {pos}")
    moved = np.moveaxis(f.values, distinguished, -1)
    sub = moved[np.ix_(*[list(side) for side in box.subsets])]
    return sub.reshape(-1, f.shape[distinguished])


def check_shattered(f: MeasuredFunction, box: Box, distinguished: int,
                    r: float, s: float,
                    cap: int = defaults.GRID_CAP) -> ShatteringCertificate | None:
    """Full certificate if every subset of the box grid has a witness, else None."""
    if r > s:
        raise InvalidArgumentError(f"thresholds must satisfy r <= s, got {r} > {s}")
    g = box.grid_size
    if g > cap:
        raise ResourceLimitError(
            f"box grid has {g} points, exceeding the cap of {cap} "
            f"(2**{g} subsets would need witnesses)")
    table = _grid_value_table(f, box, distinguished)
    bits = 1 << np.arange(g, dtype=np.int64)
    lo_masks = ((table <= r).T @ bits).astype(np.int64)
    hi_masks = ((table >= s).T @ bits).astype(np.int64)
    full = (1 << g) - 1
    needed = 1 << g
    witnesses: dict = {}
    for b in range(table.shape[1]):
        lo = int(lo_masks[b])
        hi = int(hi_masks[b])
        if lo | hi != full:
            continue  # some grid value falls strictly inside (r, s)
        base = full & ~hi
        free = lo & hi
        sub = free
        while True:
            witnesses.setdefault(base | sub, b)
            if sub == 0:
                break
            sub = (sub - 1) & free
        if len(witnesses) == needed:
            return ShatteringCertificate(box, distinguished, float(r), float(s), witnesses)
    return None


def verify_certificate(f: MeasuredFunction, cert: ShatteringCertificate) -> bool:
    """Recompute every witness condition; exact comparisons, no tolerance."""
    grid = cert.box.grid()
    g = len(grid)
    if set(cert.witnesses) != set(range(1 << g)):
        return False
    table = _grid_value_table(f, cert.box, cert.distinguished)
    for mask, b in cert.witnesses.items():
        col = table[:, b]
        for i in range(g):
            if mask >> i & 1:
                if not col[i] <= cert.r:
                    return False
            elif not col[i] >= cert.s:
                return False
    return True


def vc_k(f: MeasuredFunction, k: int, distinguished: int,
         r: float = 0.5, s: float = 0.5,
         cap: int = defaults.GRID_CAP) -> VcResult:
    """Largest d with a certified square d-box, searched d = 1, 2, ...

    Box enumeration is lexicographic over sorted vertex combinations, so the
    returned certificate sits on the lexicographically least maximal box.
    When the grid cap stops the search before candidates are exhausted the
    result carries ``complete=False`` and is a certified lower bound.
    """
    if f.arity != k + 1:
        raise InvalidArgumentError(f"vc_k needs arity k+1 = {k + 1}, got {f.arity}")
    positions = _box_positions(f.arity, distinguished)
    side_limit = min(f.shape[p] for p in positions)
    best = VcResult(0, None, complete=True)
    d = 1
    while d <= side_limit:
        if d ** k > cap:
            return VcResult(best.dimension, best.certificate, complete=False)
        found = None
        for combo in itertools.product(
                *[itertools.combinations(range(f.shape[p]), d) for p in positions]):
            cert = check_shattered(f, Box(combo), distinguished, r, s, cap=cap)
            if cert is not None:
                found = cert
                break
        if found is None:
            return best
        best = VcResult(d, found, complete=True)
        d += 1
    return best


def vc_k_slicewise(f: MeasuredFunction, k: int, r: float = 0.5, s: float = 0.5,
                   cap: int = defaults.GRID_CAP) -> int:
    """Supremum of vc_k over all (k+1)-ary fibers and distinguished choices."""
    arity = f.arity
    if arity < k + 1:
        raise InvalidArgumentError(f"arity {arity} below k+1 = {k + 1}")
    best = 0
    for fixed_positions in itertools.combinations(range(arity), arity - (k + 1)):
        ranges = [range(f.shape[p]) for p in fixed_positions]
        for assignment in itertools.product(*ranges):
            sub = fiber(f, dict(zip(fixed_positions, assignment)))
            for dist in range(k + 1):
                best = max(best, vc_k(sub, k, dist, r, s, cap=cap).dimension)
    return best


def trace_count(E: MeasuredFunction, box: Box, distinguished: int) -> int:
    """Number of distinct intersections of the box grid with fibers of E."""
    if not E.is_boolean():
        raise InvalidArgumentError("trace_count needs a Boolean relation")
    table = _grid_value_table(E, box, distinguished)
    g = table.shape[0]
    bits = 1 << np.arange(g, dtype=np.int64)
    masks = ((table == 1.0).T @ bits).astype(np.int64)
    return len(set(masks.tolist()))


def sauer_shelah_bound(m: int, k: int, z: int) -> int:
    """Sum of binomials C(m**k, i) for i < z, exact integer arithmetic."""
    if m < 1 or z < 1:
        raise InvalidArgumentError("need m >= 1 and z >= 1")
    cells = m ** k
    return sum(math.comb(cells, i) for i in range(z))


def zarankiewicz(m: int, a: int, k: int) -> int:
    """Minimal z forcing a complete k-partite a-box, by exhausting all
    k-partite k-uniform hypergraphs with parts of size m."""
    limit = defaults.ZARANKIEWICZ_LIMITS.get(k)
    if limit is None or m > limit:
        raise ResourceLimitError(
            f"zarankiewicz exhaustive search infeasible for k={k}, m={m} "
            f"(limits: {defaults.ZARANKIEWICZ_LIMITS})")
    if a > m:
        raise InvalidArgumentError(f"a={a} exceeds part size m={m}")
    cells = list(itertools.product(*[range(m)] * k))
    cell_bit = {c: i for i, c in enumerate(cells)}
    box_masks = []
    for sides in itertools.product(*[itertools.combinations(range(m), a)
                                     for _ in range(k)]):
        mask = 0
        for cell in itertools.product(*sides):
            mask |= 1 << cell_bit[cell]
        box_masks.append(mask)
    best_free = 0
    for graph in range(1 << len(cells)):
        if any(graph & bm == bm for bm in box_masks):
            continue
        best_free = max(best_free, graph.bit_count())
    return best_free + 1


def vc_profile(f: MeasuredFunction, k: int, distinguished: int,
               height: int = defaults.DYADIC_HEIGHT,
               cap: int = defaults.GRID_CAP) -> VcProfile:
    """vc_k on every dyadic threshold pair r < s of the given height."""
    qs = [Fraction(i, 2 ** height) for i in range(2 ** height + 1)]
    entries = {}
    for i, r in enumerate(qs):
        for s in qs[i + 1:]:
            entries[(r, s)] = vc_k(f, k, distinguished, float(r), float(s), cap=cap)
    return VcProfile(entries)
