"""Finite measured multipartite ground sets and tensor-valued functions.

A :class:`PartiteSpace` is a list of named parts, each carrying an atomic
probability measure on its vertices.  Product measures on any signature
(a tuple of part indices, repetition allowed) are derived lazily from the
per-part weights, which is lossless for the finite atomic model.

Functions on a product are dense float64 tensors; all integrals use
compensated summation (``math.fsum``) so results are independent of
reduction order.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .defaults import INTEGRAL_TOL, POINTWISE_TOL
from .errors import InvalidArgumentError

Signature = tuple  # tuple[int, ...]: part index per coordinate, repetition allowed

_WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Part:
    """One vertex class with an atomic probability measure on it."""

    name: str
    size: int
    weights: tuple

    def __eq__(self, other):
        # Weights compare as float64 so Fraction-weighted parts equal their
        # serialized round-trip.
        if not isinstance(other, Part):
            return NotImplemented
        return (self.name == other.name and self.size == other.size
                and tuple(map(float, self.weights)) == tuple(map(float, other.weights)))

    def __post_init__(self):
        if self.size < 1:
            raise InvalidArgumentError(f"part {self.name!r}: size must be >= 1")
        if len(self.weights) != self.size:
            raise InvalidArgumentError(
                f"part {self.name!r}: {len(self.weights)} weights for size {self.size}")
        if any(w < 0 for w in self.weights):
            raise InvalidArgumentError(f"part {self.name!r}: negative weight")
        total = _exact_sum(self.weights)
        if abs(total - 1) > _WEIGHT_SUM_TOL:
            raise InvalidArgumentError(
                f"part {self.name!r}: weights sum to {total}, not 1")
        object.__setattr__(self, "weights", tuple(self.weights))

    @property
    def weight_array(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights], dtype=np.float64)

    @staticmethod
    def uniform(name: str, size: int) -> "Part":
        return Part(name, size, tuple(Fraction(1, size) for _ in range(size)))


def _exact_sum(weights):
    if all(isinstance(w, Fraction) for w in weights):
        return sum(weights, Fraction(0))
    return math.fsum(float(w) for w in weights)


@dataclass(frozen=True, eq=False)
class PartiteSpace:
    """Finite vertex parts, each with an atomic probability measure."""

    parts: tuple

    def __eq__(self, other):
        if not isinstance(other, PartiteSpace):
            return NotImplemented
        return self.parts == other.parts

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        names = [p.name for p in self.parts]
        if len(set(names)) != len(names):
            raise InvalidArgumentError(f"duplicate part names: {names}")
        object.__setattr__(self, "_weight_cache", {})

    @staticmethod
    def uniform(sizes: Sequence[int], names: Sequence[str] | None = None) -> "PartiteSpace":
        names = names or [f"V{i + 1}" for i in range(len(sizes))]
        return PartiteSpace(tuple(Part.uniform(n, s) for n, s in zip(names, sizes)))

    def validate_signature(self, signature) -> tuple:
        sig = tuple(int(i) for i in signature)
        for i in sig:
            if not 0 <= i < len(self.parts):
                raise InvalidArgumentError(f"signature index {i} out of range")
        return sig

    def sizes(self, signature) -> tuple:
        return tuple(self.parts[i].size for i in signature)

    def weight_vector(self, part_index: int) -> np.ndarray:
        return self.parts[part_index].weight_array

    def weight_tensor(self, signature) -> np.ndarray:
        """Dense product-measure tensor on the given signature (cached)."""
        sig = self.validate_signature(signature)
        cache = self._weight_cache
        if sig not in cache:
            w = np.ones((), dtype=np.float64)
            for i in sig:
                w = np.multiply.outer(w, self.weight_vector(i))
            w = w.reshape(self.sizes(sig))
            w.flags.writeable = False
            cache[sig] = w
        return cache[sig]

    def point_weight(self, signature, point) -> float:
        """Product weight of one point; Fubini makes this the point's mass."""
        sig = self.validate_signature(signature)
        prod = 1.0
        for i, v in zip(sig, point):
            prod *= float(self.parts[i].weights[v])
        return prod


@dataclass(frozen=True, eq=False)
class MeasuredFunction:
    """Dense tensor over a signature; values in [0, 1] (or [-1, 1] if signed)."""

    space: PartiteSpace
    signature: tuple
    values: np.ndarray
    name: str = "f"
    signed: bool = False

    def __eq__(self, other):
        if not isinstance(other, MeasuredFunction):
            return NotImplemented
        return (self.space == other.space and self.signature == other.signature
                and self.name == other.name
                and np.array_equal(self.values, other.values))

    def __post_init__(self):
        sig = self.space.validate_signature(self.signature)
        object.__setattr__(self, "signature", sig)
        vals = np.asarray(self.values, dtype=np.float64)
        expected = self.space.sizes(sig)
        if vals.shape != expected:
            raise InvalidArgumentError(
                f"{self.name}: tensor shape {vals.shape} != signature extents {expected}")
        lo, hi = (-1.0, 1.0) if self.signed else (0.0, 1.0)
        if vals.size and (vals.min() < lo - POINTWISE_TOL or vals.max() > hi + POINTWISE_TOL):
            raise InvalidArgumentError(
                f"{self.name}: values outside [{lo}, {hi}] beyond tolerance "
                f"(min {vals.min()}, max {vals.max()})")
        vals = np.asarray(np.clip(vals, lo, hi), dtype=np.float64)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def arity(self) -> int:
        return len(self.signature)

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def is_boolean(self) -> bool:
        v = self.values
        return bool(np.all((v == 0.0) | (v == 1.0)))

    @staticmethod
    def constant(space, signature, c, name="const", signed=False) -> "MeasuredFunction":
        sig = space.validate_signature(signature)
        vals = np.full(space.sizes(sig), float(c), dtype=np.float64)
        return MeasuredFunction(space, sig, vals, name=name, signed=signed)


class Relation(MeasuredFunction):
    """A MeasuredFunction whose values are exactly 0 or 1."""

    def __post_init__(self):
        super().__post_init__()
        vals = np.asarray(self.values)
        snapped = np.asarray(np.where(np.abs(vals - 1.0) <= POINTWISE_TOL, 1.0,
                                      np.where(np.abs(vals) <= POINTWISE_TOL, 0.0, vals)),
                             dtype=np.float64)
        if not np.all((snapped == 0.0) | (snapped == 1.0)):
            raise InvalidArgumentError(f"{self.name}: relation values must be 0/1")
        snapped.flags.writeable = False
        object.__setattr__(self, "values", snapped)

    @property
    def bool_values(self) -> np.ndarray:
        return self.values.astype(bool)

    @staticmethod
    def from_bool(space, signature, mask, name="E") -> "Relation":
        return Relation(space, signature, np.asarray(mask, dtype=np.float64), name=name)


def as_relation(f: MeasuredFunction) -> Relation:
    if isinstance(f, Relation):
        return f
    return Relation(f.space, f.signature, f.values, name=f.name)


# --------------------------------------------------------------------------
# integration


def integrate(f: MeasuredFunction) -> float:
    """∫ f dμ over the full product measure, compensated."""
    w = f.space.weight_tensor(f.signature)
    return math.fsum((w * f.values).ravel().tolist())


def measure(rel: MeasuredFunction) -> float:
    return integrate(rel)


def inner(f: MeasuredFunction, g: MeasuredFunction) -> float:
    _check_same_grid(f, g)
    w = f.space.weight_tensor(f.signature)
    return math.fsum((w * f.values * g.values).ravel().tolist())


def l2_norm(f: MeasuredFunction) -> float:
    w = f.space.weight_tensor(f.signature)
    sq = math.fsum((w * f.values * f.values).ravel().tolist())
    return math.sqrt(max(sq, 0.0))


def l2_distance(f: MeasuredFunction, g: MeasuredFunction) -> float:
    _check_same_grid(f, g)
    w = f.space.weight_tensor(f.signature)
    diff = f.values - g.values
    sq = math.fsum((w * diff * diff).ravel().tolist())
    return math.sqrt(max(sq, 0.0))


def _check_same_grid(f, g):
    if f.space is not g.space and f.space != g.space:
        raise InvalidArgumentError("functions live on different spaces")
    if f.signature != g.signature:
        raise InvalidArgumentError(
            f"signature mismatch: {f.signature} vs {g.signature}")


# --------------------------------------------------------------------------
# elementary transforms


def level_set(f: MeasuredFunction, r: float, mode: str = "<", q: float | None = None,
              name: str | None = None) -> Relation:
    """Threshold relation: mode ``"<"`` is {f < r}, ``">="`` is {f >= r},
    ``"interval"`` is {r <= f < q}."""
    if mode == "<":
        mask = f.values < r
        label = f"{f.name}<{r}"
    elif mode == ">=":
        mask = f.values >= r
        label = f"{f.name}>={r}"
    elif mode == "interval":
        if q is None or not r < q:
            raise InvalidArgumentError(f"interval mode needs r < q, got r={r}, q={q}")
        mask = (f.values >= r) & (f.values < q)
        label = f"{f.name}in[{r},{q})"
    else:
        raise InvalidArgumentError(f"unknown level-set mode {mode!r}")
    return Relation.from_bool(f.space, f.signature, mask, name=name or label)


def fiber(f: MeasuredFunction, fixed: Mapping[int, int]) -> MeasuredFunction:
    """Restrict f by pinning coordinate positions to vertices.

    The result lives on the residual signature, original coordinate order.
    """
    arity = f.arity
    for pos, v in fixed.items():
        if not 0 <= pos < arity:
            raise InvalidArgumentError(f"fiber position {pos} out of range")
        if not 0 <= v < f.shape[pos]:
            raise InvalidArgumentError(
                f"fiber vertex {v} out of range for coordinate {pos}")
    index = tuple(fixed.get(pos, slice(None)) for pos in range(arity))
    residual = tuple(f.signature[pos] for pos in range(arity) if pos not in fixed)
    vals = f.values[index]
    cls = Relation if isinstance(f, Relation) else MeasuredFunction
    label = ",".join(f"{p}:{v}" for p, v in sorted(fixed.items()))
    return cls(f.space, residual, np.array(vals), name=f"{f.name}[{label}]",
               **({} if isinstance(f, Relation) else {"signed": f.signed}))


def permute(f: MeasuredFunction, sigma: Sequence[int]) -> MeasuredFunction:
    """Reindex coordinates: output position i reads f's coordinate sigma[i]."""
    sigma = tuple(int(s) for s in sigma)
    if sorted(sigma) != list(range(f.arity)):
        raise InvalidArgumentError(f"{sigma} is not a permutation of 0..{f.arity - 1}")
    new_sig = tuple(f.signature[s] for s in sigma)
    vals = np.transpose(f.values, axes=sigma)
    cls = Relation if isinstance(f, Relation) else MeasuredFunction
    return cls(f.space, new_sig, np.array(vals), name=f"{f.name}^perm",
               **({} if isinstance(f, Relation) else {"signed": f.signed}))


def monus(f: MeasuredFunction, g: MeasuredFunction) -> MeasuredFunction:
    """Truncated subtraction max{0, f - g}, exact range [0, 1]."""
    _check_same_grid(f, g)
    return MeasuredFunction(f.space, f.signature, np.maximum(0.0, f.values - g.values),
                            name=f"({f.name}monus{g.name})")


def trunc_add(f: MeasuredFunction, g: MeasuredFunction) -> MeasuredFunction:
    """Saturating addition min{1, f + g}."""
    _check_same_grid(f, g)
    return MeasuredFunction(f.space, f.signature, np.minimum(1.0, f.values + g.values),
                            name=f"({f.name}+.{g.name})")


def scale_half(f: MeasuredFunction) -> MeasuredFunction:
    return MeasuredFunction(f.space, f.signature, f.values * 0.5, name=f"({f.name}/2)")


def complement(f: MeasuredFunction) -> MeasuredFunction:
    vals = 1.0 - f.values
    cls = Relation if isinstance(f, Relation) else MeasuredFunction
    return cls(f.space, f.signature, vals, name=f"(1-{f.name})")


def saturating_repeat(f: MeasuredFunction, p: int) -> MeasuredFunction:
    """p-fold saturating self-addition: min{1, p * f}."""
    if p < 0:
        raise InvalidArgumentError("repeat count must be non-negative")
    return MeasuredFunction(f.space, f.signature, np.minimum(1.0, p * f.values),
                            name=f"({p}x.{f.name})")


def bounded_arith(f: MeasuredFunction, g: MeasuredFunction | None = None, *,
                  op: str, p: int | None = None) -> MeasuredFunction:
    """Dispatch for the bounded [0,1] arithmetic closure operations."""
    if op == "monus":
        if g is None:
            raise InvalidArgumentError("monus needs two operands")
        return monus(f, g)
    if op == "trunc_add":
        if g is None:
            raise InvalidArgumentError("trunc_add needs two operands")
        return trunc_add(f, g)
    if op == "scale_half":
        return scale_half(f)
    if op == "complement":
        return complement(f)
    if op == "repeat":
        if p is None:
            raise InvalidArgumentError("repeat needs the count p")
        return saturating_repeat(f, p)
    raise InvalidArgumentError(f"unknown bounded_arith op {op!r}")


def continuous_combine(fs: Sequence[MeasuredFunction],
                       g: Callable) -> MeasuredFunction:
    """Pointwise g(f1(x), ..., fn(x)), clipped to [0, 1].

    Emits a warning when g strays out of [0, 1] by more than the integral
    tolerance; the clip is silent below that.
    """
    if not fs:
        raise InvalidArgumentError("continuous_combine needs at least one function")
    first = fs[0]
    for other in fs[1:]:
        _check_same_grid(first, other)
    flat = [f.values.ravel() for f in fs]
    try:
        out = np.asarray(g(*[f.values for f in fs]), dtype=np.float64)
        if out.shape != first.shape:
            raise ValueError
    except Exception:
        out = np.array([float(g(*vals)) for vals in zip(*flat)],
                       dtype=np.float64).reshape(first.shape)
    overshoot = max(0.0, float(np.max(out)) - 1.0, -float(np.min(out)))
    if overshoot > INTEGRAL_TOL:
        warnings.warn(f"continuous_combine output strayed {overshoot:.3e} outside [0,1]; clipped",
                      stacklevel=2)
    return MeasuredFunction(first.space, first.signature, np.clip(out, 0.0, 1.0),
                            name="g(" + ",".join(f.name for f in fs) + ")")


def average_out(f: MeasuredFunction, position: int) -> MeasuredFunction:
    """Weighted average over one coordinate; range stays within [min f, max f]."""
    if not 0 <= position < f.arity:
        raise InvalidArgumentError(f"position {position} out of range")
    w = f.space.weight_vector(f.signature[position])
    moved = np.moveaxis(f.values, position, -1)
    rows = moved.reshape(-1, moved.shape[-1])
    out = np.array([math.fsum((row * w).tolist()) for row in rows],
                   dtype=np.float64).reshape(moved.shape[:-1])
    lo, hi = float(f.values.min()), float(f.values.max())
    out = np.clip(out, lo, hi)
    residual = tuple(p for i, p in enumerate(f.signature) if i != position)
    return MeasuredFunction(f.space, residual, out, name=f"avg({f.name},{position})",
                            signed=f.signed)


def all_traversals(f: MeasuredFunction, counts: Sequence[int],
                   name: str | None = None) -> MeasuredFunction:
    """Relation of complete column traversals: coordinate i is replicated
    counts[i] times, and the value is the product of f over every way of
    picking one replica per coordinate.

    For a relation R this is the set of grids all of whose cells lie in R.
    """
    counts = tuple(int(c) for c in counts)
    if len(counts) != f.arity or any(c < 1 for c in counts):
        raise InvalidArgumentError(f"need one positive count per coordinate, got {counts}")
    new_sig = tuple(p for p, c in zip(f.signature, counts) for _ in range(c))
    offsets = np.concatenate([[0], np.cumsum(counts)])[:-1]
    total = sum(counts)
    out = np.ones(f.space.sizes(new_sig), dtype=np.float64)
    for combo in itertools.product(*[range(c) for c in counts]):
        shape = [1] * total
        for coord, j in enumerate(combo):
            shape[offsets[coord] + j] = f.shape[coord]
        axes = [offsets[coord] + j for coord, j in enumerate(combo)]
        view = np.moveaxis(f.values.reshape(f.shape + (1,) * (total - f.arity)),
                           range(f.arity), axes)
        out = out * view
    cls = Relation if isinstance(f, Relation) else MeasuredFunction
    return cls(f.space, new_sig, out, name=name or f"traversals({f.name})")
