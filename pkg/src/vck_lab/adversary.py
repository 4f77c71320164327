"""Adversarial measures from random partite patterns and inapproximability.

A high-dimension shattering certificate lets a random (k+1)-partite pattern
be embedded into the function's grid; concentrating each part's measure
uniformly on the embedded vertices (point masses on anchor vertices for the
remaining coordinates) produces an instance whose level sets look like the
random pattern, hence are quasirandom and resist low-arity approximation.
"""

from __future__ import annotations

import math
import statistics
import warnings
from dataclasses import dataclass
from fractions import Fraction

from . import defaults, rng
from .decomp import fit_weighted_cylinders
from .errors import InvalidArgumentError
from .gowers import box_norm
from .space import MeasuredFunction, Part, PartiteSpace, Relation
from .vck import ShatteringCertificate


def random_pattern(d: int, k: int, p: float, seed: int, trial: int = 0) -> Relation:
    """I.i.d. Bernoulli(p) (k+1)-partite pattern on [d]^(k+1), uniform parts."""
    if d < 1:
        raise InvalidArgumentError("d must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"p={p} outside [0, 1]")
    space = PartiteSpace.uniform([d] * (k + 1),
                                 [f"P{i + 1}" for i in range(k + 1)])
    vals = rng.bernoulli(seed, rng.STREAM_PATTERN, (d,) * (k + 1), p, trial)
    return Relation(space, tuple(range(k + 1)), vals, name=f"H{d}")


@dataclass(frozen=True)
class AdversarialInstance:
    base: MeasuredFunction          # on the original space
    pattern: Relation               # the (k+1)-ary pattern on [d]^(k+1)
    embedding: dict                 # coordinate position -> tuple of vertices
    anchors: dict                   # coordinate position -> anchor vertex
    replacement: PartiteSpace       # new measures, exact rational weights
    function: MeasuredFunction      # base values on the replacement space

    def weight_fractions(self) -> list:
        return [p.weights for p in self.replacement.parts]


def build_instance(f: MeasuredFunction, cert, H: Relation,
                   anchors=None) -> AdversarialInstance:
    """Replacement measures concentrating on an embedded copy of the pattern.

    ``cert`` is either a ShatteringCertificate for a d-box of f (witnesses
    supply the embedded vertices of the distinguished coordinate, one per
    pattern slice) or an explicit mapping {coordinate -> vertex tuple}.
    Anchor vertices get unit point mass on every non-embedded coordinate.
    """
    d = H.shape[0]
    if any(s != d for s in H.shape):
        raise InvalidArgumentError("pattern must have equal part sizes")
    anchors = dict(anchors or {})

    if isinstance(cert, ShatteringCertificate):
        box_positions = [p for p in range(f.arity) if p != cert.distinguished]
        if len(H.shape) != len(box_positions) + 1:
            raise InvalidArgumentError(
                f"pattern arity {len(H.shape)} does not match certificate "
                f"box dimension {len(box_positions)} + 1")
        if any(len(side) != d for side in cert.box.subsets):
            raise InvalidArgumentError("certificate box sides must match pattern size")
        grid_size = cert.box.grid_size
        slice_flat = H.values.reshape(grid_size, d)
        witness_vertices = []
        for j in range(d):
            mask = 0
            for i in range(grid_size):
                if slice_flat[i, j] == 1.0:
                    mask |= 1 << i
            if mask not in cert.witnesses:
                raise InvalidArgumentError(
                    "certificate does not cover every pattern slice; "
                    "it must witness all subsets of the box grid")
            witness_vertices.append(cert.witnesses[mask])
        embedding = {pos: side for pos, side in zip(box_positions, cert.box.subsets)}
        embedding[cert.distinguished] = tuple(witness_vertices)
    else:
        embedding = {int(p): tuple(int(v) for v in side) for p, side in dict(cert).items()}
        if len(embedding) != len(H.shape):
            raise InvalidArgumentError(
                f"embedding fixes {len(embedding)} coordinates for a "
                f"{len(H.shape)}-ary pattern")
        if any(len(side) != d for side in embedding.values()):
            raise InvalidArgumentError("embedded vertex tuples must match pattern size")

    missing = set(range(f.arity)) - set(embedding) - set(anchors)
    if missing:
        raise InvalidArgumentError(f"anchors must cover coordinates {sorted(missing)}")

    new_parts = []
    for pos, part in enumerate(f.space.parts):
        part_positions = [p for p in range(f.arity) if f.signature[p] == pos]
        weights = [Fraction(0)] * part.size
        touched = False
        for p in part_positions:
            if p in embedding:
                for v in embedding[p]:
                    weights[v] += Fraction(1, d)
                touched = True
            elif p in anchors:
                weights[anchors[p]] += Fraction(1)
                touched = True
        if not touched:
            weights = list(part.weights)
        else:
            total = sum(weights, Fraction(0))
            weights = [w / total for w in weights]
        new_parts.append(Part(part.name, part.size, tuple(weights)))
    replacement = PartiteSpace(tuple(new_parts))
    replaced = MeasuredFunction(replacement, f.signature, f.values,
                                name=f.name, signed=f.signed)
    return AdversarialInstance(f, H, embedding, anchors, replacement, replaced)


def pattern_norm(H: Relation) -> float:
    """Box norm of the centered pattern indicator under uniform measure."""
    centered = MeasuredFunction(H.space, H.signature, H.values - 0.5,
                                name=f"{H.name}-1/2", signed=True)
    return box_norm(centered).norm


def quasirandomness_curve(k: int, d_values, trials: int, seed: int,
                          p: float = 0.5) -> list:
    """Per-d mean and standard deviation of the centered-pattern box norm.

    Means are expected to decrease in d; adjacent inversions only warn (they
    are flagged against one standard deviation, never fatal).
    Returns rows ``{"d", "mean_norm", "std_norm"}``.
    """
    rows = []
    for di, d in enumerate(d_values):
        norms = [pattern_norm(random_pattern(d, k, p, seed,
                                             trial=(di << 16) | t))
                 for t in range(trials)]
        mean = math.fsum(norms) / len(norms)
        std = statistics.pstdev(norms) if len(norms) > 1 else 0.0
        rows.append({"d": int(d), "mean_norm": mean, "std_norm": std})
    for prev, cur in zip(rows, rows[1:]):
        if cur["mean_norm"] > prev["mean_norm"]:
            gap = cur["mean_norm"] - prev["mean_norm"]
            warnings.warn(
                f"quasirandomness means inverted at d={cur['d']} "
                f"(+{gap:.3e}, std {cur['std_norm']:.3e})", stacklevel=2)
    return rows


def inapproximability_score(instance: AdversarialInstance, k: int, N: int,
                            seed: int = 0,
                            restarts: int = defaults.SCORE_RESTARTS,
                            als_iters: int = defaults.ALS_ITERS) -> float:
    """Best (lowest) low-arity fit error under the replacement measure,
    minimized over restarts; higher means harder to approximate.

    Restart 0 uses the deterministic residual initialization, later restarts
    use seeded random factor initializations on derived streams.
    """
    f = instance.function
    best = None
    for r in range(restarts):
        sub_seed = int(rng.raw64(seed, rng.STREAM_SCORE, 1, r)[0])
        mode = "auto" if r == 0 else "random"
        _, report = fit_weighted_cylinders(f, k, N, als_iters=als_iters,
                                           seed=sub_seed, init_mode=mode)
        best = report.error if best is None else min(best, report.error)
    return float(best)
