"""Fiber-generated Boolean algebras, atom partitions, and L2 projections.

The generating sets are dyadic level sets of a (k+1)-ary function with a
distinguished last coordinate pinned to an anchor and some of the remaining
coordinates substituted by parameters, i.e. lower-arity cylinder fibers.
Conditional expectation exists only as projection onto an explicit finite
atom partition.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import defaults
from .errors import DiagnosticFailureError, InvalidArgumentError
from .space import (MeasuredFunction, Relation, fiber, l2_distance, monus,
                    saturating_repeat)


def dyadics(height: int) -> list:
    """All dyadic rationals of the given height in [0, 1], ascending."""
    return [Fraction(i, 2 ** height) for i in range(2 ** height + 1)]


@dataclass(frozen=True)
class FiberFamilySpec:
    """Recipe for the generating family of cylinder fibers.

    height: dyadic threshold height; anchors: vertices of the distinguished
    (last) coordinate; params: per searched coordinate, the vertex list the
    substitutions a_i are drawn from.  Index sets range over non-empty
    subsets of the searched coordinates of size at most k-1.
    """

    height: int
    anchors: tuple
    params: tuple

    def __post_init__(self):
        if self.height < 1:
            raise InvalidArgumentError("dyadic height must be >= 1")
        object.__setattr__(self, "anchors", tuple(int(a) for a in self.anchors))
        object.__setattr__(self, "params",
                           tuple(tuple(int(v) for v in row) for row in self.params))


def _index_sets(k: int) -> list:
    out = []
    for size in range(1, k):
        out.extend(itertools.combinations(range(k), size))
    return out


def fiber_family(f: MeasuredFunction, spec: FiberFamilySpec) -> list:
    """One named relation on the searched grid per (threshold, index set,
    substitution, anchor); names encode the full provenance."""
    if not spec.anchors:
        raise InvalidArgumentError("fiber family needs at least one anchor")
    k = f.arity - 1
    if k < 1:
        raise InvalidArgumentError("function must have arity >= 2")
    if len(spec.params) != k:
        raise InvalidArgumentError(
            f"{len(spec.params)} parameter rows for {k} searched coordinates")
    dist = f.arity - 1
    for a in spec.anchors:
        if not 0 <= a < f.shape[dist]:
            raise InvalidArgumentError(f"anchor {a} out of range")
    searched_sig = f.signature[:k]
    out = []
    for q in dyadics(spec.height):
        for I in _index_sets(k):
            choices = [spec.params[i] for i in I]
            for assignment in itertools.product(*choices):
                for b in spec.anchors:
                    slice_fn = fiber(f, {dist: b,
                                         **{i: v for i, v in zip(I, assignment)}})
                    low = slice_fn.values < float(q)
                    vals = np.broadcast_to(
                        np.moveaxis(low.reshape(low.shape + (1,) * len(I)),
                                    range(low.ndim), _residual_axes(k, I)),
                        f.shape[:k])
                    name = (f"{f.name}<{q.numerator}/{q.denominator}"
                            f"|I={','.join(map(str, I))}"
                            f"|a={','.join(map(str, assignment))}|b={b}")
                    out.append(Relation.from_bool(f.space, searched_sig, vals, name=name))
    return out


def _residual_axes(k: int, I) -> list:
    return [pos for pos in range(k) if pos not in I]


def family_size(spec: FiberFamilySpec, k: int) -> int:
    """Cardinality bookkeeping for the generated family."""
    per_q = sum(math.prod(len(spec.params[i]) for i in I) for I in _index_sets(k))
    return (2 ** spec.height + 1) * per_q * len(spec.anchors)


@dataclass(frozen=True)
class AtomPartition:
    """Disjoint cells covering the grid, generated by membership sign vectors."""

    space: object
    signature: tuple
    cells: tuple                      # tuple of sorted flat-index arrays
    generator_names: tuple = ()

    def __post_init__(self):
        frozen = []
        for cell in self.cells:
            arr = np.asarray(cell, dtype=np.int64)
            arr.flags.writeable = False
            frozen.append(arr)
        object.__setattr__(self, "cells", tuple(frozen))

    @property
    def cell_count(self) -> int:
        return len(self.cells)

    def covers(self, shape) -> bool:
        total = int(np.prod(shape, dtype=np.int64))
        seen = np.concatenate([np.asarray(c) for c in self.cells]) if self.cells else np.array([])
        return len(seen) == total and len(np.unique(seen)) == total

    def to_doc(self) -> dict:
        return {"signature": list(self.signature),
                "generator_names": list(self.generator_names),
                "cells": [c.tolist() for c in self.cells]}


def atoms(generators, space=None, signature=None) -> AtomPartition:
    """Partition of the grid into distinct sign-vectors of generator membership.

    Cells are ordered by their minimal flat index; with no generators the
    whole grid is a single cell.
    """
    generators = list(generators)
    if generators:
        space = generators[0].space
        signature = generators[0].signature
        for g in generators[1:]:
            if g.signature != signature:
                raise InvalidArgumentError("generators must share a signature")
    elif space is None or signature is None:
        raise InvalidArgumentError("atoms with no generators needs space and signature")
    shape = space.sizes(signature)
    total = int(np.prod(shape, dtype=np.int64))
    if not generators:
        return AtomPartition(space, tuple(signature), (np.arange(total),), ())
    stack = np.stack([g.values.ravel() == 1.0 for g in generators])
    keys = {}
    for idx in range(total):
        key = stack[:, idx].tobytes()
        keys.setdefault(key, []).append(idx)
    cells = sorted(keys.values(), key=lambda c: c[0])
    return AtomPartition(space, tuple(signature),
                         tuple(np.array(c, dtype=np.int64) for c in cells),
                         tuple(g.name for g in generators))


def project_simple(f: MeasuredFunction, partition: AtomPartition,
                   round_height: int | None = None):
    """L2-optimal partition-measurable approximant and its error.

    The value on each cell is the measure-weighted mean of f there (cells of
    measure zero get 0).  ``round_height`` optionally rounds the cell values
    to dyadic rationals of that height (round-half-even).
    """
    if partition.signature != f.signature or not partition.covers(f.shape):
        raise InvalidArgumentError("partition does not cover the function grid")
    wflat = f.space.weight_tensor(f.signature).ravel()
    fflat = f.values.ravel()
    out = np.zeros_like(fflat)
    for cell in partition.cells:
        wsum = math.fsum(wflat[cell].tolist())
        if wsum > 0.0:
            val = math.fsum((wflat[cell] * fflat[cell]).tolist()) / wsum
        else:
            val = 0.0
        if round_height is not None:
            scale = 2 ** round_height
            val = round(val * scale) / scale
        out[cell] = val
    g = MeasuredFunction(f.space, f.signature, out.reshape(f.shape),
                         name=f"proj({f.name})")
    return g, l2_distance(f, g)


def conditional_means(indicator: np.ndarray, partition: AtomPartition,
                      wflat: np.ndarray) -> np.ndarray:
    """Per-cell conditional expectation of a 0/1 flat array (0 on null cells)."""
    out = np.zeros(len(partition.cells))
    for j, cell in enumerate(partition.cells):
        wsum = math.fsum(wflat[cell].tolist())
        if wsum > 0.0:
            out[j] = math.fsum((wflat[cell] * indicator[cell]).tolist()) / wsum
    return out


@dataclass(frozen=True)
class FuzzinessWitness:
    height: int
    r: Fraction
    s: Fraction
    delta: float
    fuzzy_measure: float


def fuzziness(f: MeasuredFunction, partition: AtomPartition, eps: float,
              height_cap: int = defaults.FUZZINESS_HEIGHT_CAP):
    """Search for thresholds r < s where the partition is genuinely uncertain.

    Returns None when the projection error is below eps (f is measurable
    enough, nothing to find).  Otherwise scans dyadic heights upward and, at
    each height, maximizes delta over threshold pairs, breaking ties toward
    the wider pair; the witness is re-verified before returning.  The scan
    cannot fail for a grid function when the precondition holds, so
    exhausting the cap raises with the trace attached.
    """
    _, err = project_simple(f, partition)
    if err < eps:
        return None
    wflat = f.space.weight_tensor(f.signature).ravel()
    cell_meas = np.array([math.fsum(wflat[c].tolist()) for c in partition.cells])
    fflat = f.values.ravel()
    trace = []
    for height in range(1, height_cap + 1):
        qs = dyadics(height)
        e_low = {q: conditional_means((fflat < float(q)).astype(np.float64),
                                      partition, wflat) for q in qs}
        e_high = {q: conditional_means((fflat >= float(q)).astype(np.float64),
                                       partition, wflat) for q in qs}
        best = None
        for i, r in enumerate(qs):
            for s in qs[i + 1:]:
                m = np.minimum(e_low[r], e_high[s])
                delta = 0.0
                for tau in sorted(set(m[m > 0].tolist()), reverse=True):
                    covered = math.fsum(cell_meas[m >= tau].tolist())
                    delta = max(delta, min(tau, covered))
                cand = (delta, float(s - r), -float(r), r, s)
                if delta > 0 and (best is None or cand[:3] > best[:3]):
                    best = cand
        trace.append((height, None if best is None else (best[3], best[4], best[0])))
        if best is not None:
            delta, _, _, r, s = best
            mask = np.minimum(
                conditional_means((fflat < float(r)).astype(np.float64), partition, wflat),
                conditional_means((fflat >= float(s)).astype(np.float64), partition, wflat),
            ) >= delta
            fuzzy_measure = math.fsum(cell_meas[mask].tolist())
            if fuzzy_measure < delta:
                raise DiagnosticFailureError(
                    "fuzziness witness failed re-verification", trace)
            return FuzzinessWitness(height, r, s, delta, fuzzy_measure)
    raise DiagnosticFailureError(
        f"no fuzziness witness up to height {height_cap} despite projection "
        f"error {err} >= {eps}", trace)


def threshold_witness(f0: MeasuredFunction, f1: MeasuredFunction):
    """Rationals r < s with mu(f0 < r) > mu(f1 < s) whenever the mean of f1
    exceeds the mean of f0; None otherwise.

    Both step functions change only at attained values, so scanning the
    merged breakpoint intervals in lexicographic order finds the first
    witness; the returned pair is verified by direct measure comparison.
    """
    if f0.signature != f1.signature:
        raise InvalidArgumentError("threshold_witness needs a shared signature")
    w = f0.space.weight_tensor(f0.signature).ravel()
    v0, v1 = f0.values.ravel(), f1.values.ravel()
    mean0 = math.fsum((w * v0).tolist())
    mean1 = math.fsum((w * v1).tolist())
    if mean1 <= mean0:
        return None
    points = sorted({0.0, 1.0, *v0.tolist(), *v1.tolist()})

    def mu_below(vals, thr):
        return math.fsum(w[vals < thr].tolist())

    for ia in range(len(points) - 1):
        for ib in range(ia, len(points) - 1):
            # representative thresholds inside (points[i], points[i+1]]
            mu0 = mu_below(v0, points[ia + 1])
            mu1 = mu_below(v1, points[ib + 1])
            if mu0 > mu1:
                if ia < ib:
                    r, s = Fraction(points[ia + 1]), Fraction(points[ib + 1])
                else:
                    lo, hi = Fraction(points[ia]), Fraction(points[ia + 1])
                    r = lo + (hi - lo) / 3
                    s = lo + (hi - lo) * 2 / 3
                if mu_below(v0, float(r)) > mu_below(v1, float(s)):
                    return r, s
    return None


def smooth_indicator(f: MeasuredFunction, g: MeasuredFunction, eps: float):
    """Saturated multiple of the truncated difference approximating the
    strict-inequality indicator of {f < g} within eps in L2.

    The repeat count p is ceil(1/gap) for the largest attained positive gap
    whose strictly-smaller gap mass stays below eps**2; points at or above
    that gap saturate to exactly 1, so the error is carried entirely by the
    small-gap mass.
    """
    if eps <= 0:
        raise InvalidArgumentError("eps must be positive")
    if f.signature != g.signature:
        raise InvalidArgumentError("smooth_indicator needs a shared signature")
    w = f.space.weight_tensor(f.signature).ravel()
    gap = (g.values - f.values).ravel()
    positive = sorted(set(gap[gap > 0].tolist()))
    if not positive:
        return saturating_repeat(monus(g, f), 1), 1
    chosen = positive[0]
    for gamma in reversed(positive):
        below = math.fsum(w[(gap > 0) & (gap < gamma)].tolist())
        if below < eps * eps:
            chosen = gamma
            break
    p = max(1, math.ceil(1.0 / chosen))
    h = saturating_repeat(monus(g, f), p)
    return h, p


def round_to_cells(f: MeasuredFunction, partition: AtomPartition,
                   threshold: float) -> Relation:
    """Union of the cells whose conditional mean of f exceeds the threshold."""
    wflat = f.space.weight_tensor(f.signature).ravel()
    means = conditional_means(f.values.ravel(), partition, wflat)
    mask = np.zeros(f.values.size, dtype=bool)
    for cell, mu in zip(partition.cells, means):
        if mu > threshold:
            mask[cell] = True
    return Relation.from_bool(f.space, f.signature, mask.reshape(f.shape),
                              name=f"cells({f.name}>{threshold})")
