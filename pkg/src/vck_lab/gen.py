"""Seeded generators for structured and adversarial test instances.

All randomness flows from one 64-bit seed through the counter-based streams
in :mod:`vck_lab.rng`, so identical configuration yields bit-identical
instances on any platform.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import defaults, rng
from .errors import InvalidArgumentError, ResourceLimitError
from .space import PartiteSpace, Relation


def membership_gadget(d: int, k: int,
                      size_cap: int = defaults.GADGET_SIZE_CAP) -> Relation:
    """Relation on [d]^k x P([d]^k) relating a grid point to the subsets
    containing it; shatters the full k-dimensional d-box by construction.

    The witness part enumerates subsets by bitmask over the row-major grid,
    so vertex j contains grid point i exactly when bit i of j is set.
    """
    if d < 1 or k < 1:
        raise InvalidArgumentError("need d >= 1 and k >= 1")
    grid_points = d ** k
    n_subsets = 1 << grid_points
    if n_subsets > size_cap:
        raise ResourceLimitError(
            f"witness part would hold {n_subsets} vertices (cap {size_cap})")
    parts = [f"V{i + 1}" for i in range(k)] + ["W"]
    space = PartiteSpace.uniform([d] * k + [n_subsets], parts)
    vals = np.zeros((d,) * k + (n_subsets,), dtype=np.float64)
    for i, point in enumerate(itertools.product(*[range(d)] * k)):
        for j in range(n_subsets):
            if j >> i & 1:
                vals[point + (j,)] = 1.0
    return Relation(space, tuple(range(k + 1)), vals, name=f"membership{d}x{k}")


@dataclass(frozen=True)
class GeneratedBoolean:
    relation: Relation
    leaves: tuple          # (positions, Relation) pairs, generation order
    expression: str        # printable form of the combining expression


def boolean_of_lower_arity(k_prime: int, k: int, m: int, sizes,
                           seed: int = 0) -> GeneratedBoolean:
    """Random Boolean combination of m cylinder-relation leaf occurrences.

    Each leaf is a Bernoulli(1/2) relation on a random coordinate set of
    size <= k, extended cylindrically; the combining tree splits the leaf
    budget recursively with random and/or connectives and leaf-level
    negations.  m = 0 yields a constant relation.  The generating leaves are
    returned for oracle use.

    Stream layout: counter 3*i for leaf i's coordinate set, 3*i+1 for its
    tensor, 3*i+2 for tree shaping bits.
    """
    if k_prime <= k:
        raise InvalidArgumentError(f"k'={k_prime} must exceed k={k}")
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) != k_prime:
        raise InvalidArgumentError(f"need {k_prime} part sizes, got {len(sizes)}")
    space = PartiteSpace.uniform(sizes)
    all_I = []
    for size in range(1, k + 1):
        all_I.extend(itertools.combinations(range(k_prime), size))

    leaves = []
    leaf_tensors = []
    for i in range(m):
        pick = int(rng.integers(seed, rng.STREAM_BOOLCOMB, 1, len(all_I), 3 * i)[0])
        positions = all_I[pick]
        sub_sizes = tuple(sizes[p] for p in positions)
        vals = rng.bernoulli(seed, rng.STREAM_BOOLCOMB, sub_sizes, 0.5, 3 * i + 1)
        rel = Relation(space, positions, vals, name=f"g{i}")
        leaves.append((positions, rel))
        leaf_tensors.append(_cylinder_bool(rel, positions, sizes))

    shape_bits = rng.integers(seed, rng.STREAM_BOOLCOMB, max(1, 8 * m), 2, 2)

    bit_pos = 0

    def next_bit() -> int:
        nonlocal bit_pos
        b = int(shape_bits[bit_pos % len(shape_bits)])
        bit_pos += 1
        return b

    def build(indices):
        if not indices:
            value = bool(next_bit())
            return np.full(sizes, value), "1" if value else "0"
        if len(indices) == 1:
            i = indices[0]
            mask, text = leaf_tensors[i], f"g{i}"
            if next_bit():
                return ~mask, f"~{text}"
            return mask, text
        split = 1 + (next_bit() * (len(indices) - 2) if len(indices) > 2 else 0)
        left, ltext = build(indices[:split])
        right, rtext = build(indices[split:])
        if next_bit():
            return left & right, f"({ltext}&{rtext})"
        return left | right, f"({ltext}|{rtext})"

    mask, text = build(list(range(m)))
    rel = Relation.from_bool(space, tuple(range(k_prime)), mask, name="boolcomb")
    return GeneratedBoolean(rel, tuple(leaves), text)


def _cylinder_bool(rel: Relation, positions, sizes) -> np.ndarray:
    expanded = rel.bool_values.reshape(rel.shape + (1,) * (len(sizes) - rel.arity))
    return np.broadcast_to(np.moveaxis(expanded, range(rel.arity), positions), sizes)


@dataclass(frozen=True)
class ParityTriple:
    relation: Relation     # ternary: odd number of the three pair relations hold
    F: Relation            # on coordinates (0, 1)
    G: Relation            # on coordinates (0, 2)
    H: Relation            # on coordinates (1, 2)


def parity_relation(F: Relation, G: Relation, H: Relation,
                    name: str = "parity") -> Relation:
    """Triples where an odd number of (x,y) in F, (x,z) in G, (y,z) in H hold."""
    total = (F.values[:, :, None] + G.values[:, None, :] + H.values[None, :, :])
    return Relation(F.space, (0, 1, 2), np.mod(total, 2.0), name=name)


def parity_triple(n: int, seed: int = 0) -> ParityTriple:
    """Ternary parity of three Bernoulli(1/2) binary relations on [n]^3.

    Stream layout: counters 0, 1, 2 for F, G, H."""
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    space = PartiteSpace.uniform([n, n, n])
    F = Relation(space, (0, 1), rng.bernoulli(seed, rng.STREAM_PARITY, (n, n), 0.5, 0),
                 name="F")
    G = Relation(space, (0, 2), rng.bernoulli(seed, rng.STREAM_PARITY, (n, n), 0.5, 1),
                 name="G")
    H = Relation(space, (1, 2), rng.bernoulli(seed, rng.STREAM_PARITY, (n, n), 0.5, 2),
                 name="H")
    return ParityTriple(parity_relation(F, G, H, name=f"parity{n}"), F, G, H)


def quasirandom(space: PartiteSpace, signature, p: float, seed: int = 0,
                name: str = "R") -> Relation:
    """I.i.d. Bernoulli(p) relation on the given signature."""
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"p={p} outside [0, 1]")
    sig = space.validate_signature(signature)
    vals = rng.bernoulli(seed, rng.STREAM_QUASIRANDOM, space.sizes(sig), p)
    return Relation(space, sig, vals, name=name)
