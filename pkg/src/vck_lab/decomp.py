"""Low-arity cylinder decompositions: evaluation, error metrics, fitters.

Two approximation routes for a k'-ary target using only (<= k)-ary material:

* weighted: g = sum_i gamma_i * prod_I f_i_I(x_I), fitted by greedy term
  addition plus projected alternating least squares (factors clipped to
  [0, 1], coefficients solved by bounded least squares);
* Boolean: a decision list over cylinder fibers of the target relation,
  grown greedily by symmetric-difference reduction and emitted as an
  and/or/not expression tree.

The existential term counts behind these forms are non-constructive, so the
fitters take explicit budgets and report achieved error.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import lsq_linear

from . import defaults, rng
from .errors import (InvalidArgumentError, InvalidStateError,
                     NumericalFailureError)
from .fibalg import FiberFamilySpec, atoms, dyadics, fiber_family, project_simple
from .space import (MeasuredFunction, Relation, fiber, integrate, level_set)
from .serialize import parse_fraction


def index_sets(k_prime: int, k: int) -> list:
    """Non-empty subsets of the k' coordinates of size at most k."""
    out = []
    for size in range(1, k + 1):
        out.extend(itertools.combinations(range(k_prime), size))
    return out


def _broadcast_factor(values: np.ndarray, positions, full_shape) -> np.ndarray:
    """View a factor tensor as a cylinder over the full grid."""
    nd = len(full_shape)
    expanded = values.reshape(values.shape + (1,) * (nd - values.ndim))
    return np.moveaxis(expanded, range(values.ndim), positions)


@dataclass(frozen=True)
class CylinderTerm:
    """gamma times a product of low-arity factors, keyed by coordinate set."""

    gamma: Fraction
    factors: dict  # tuple positions -> MeasuredFunction on the sub-signature

    def __post_init__(self):
        if not 0 <= self.gamma <= 1:
            raise InvalidArgumentError(f"gamma {self.gamma} outside [0, 1]")
        object.__setattr__(self, "factors",
                           {tuple(k): v for k, v in sorted(self.factors.items())})


@dataclass(frozen=True)
class CylinderDecomposition:
    space: object
    target_signature: tuple
    k: int
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "target_signature", tuple(self.target_signature))
        for term in self.terms:
            for positions, factor in term.factors.items():
                if len(positions) > self.k:
                    raise InvalidArgumentError(
                        f"factor on {positions} exceeds max arity {self.k}")
                expected = tuple(self.target_signature[p] for p in positions)
                if factor.signature != expected:
                    raise InvalidArgumentError(
                        f"factor signature {factor.signature} != {expected}")

    def value_range(self) -> tuple:
        return 0.0, float(sum((t.gamma for t in self.terms), Fraction(0)))

    def tensor(self) -> np.ndarray:
        shape = self.space.sizes(self.target_signature)
        out = np.zeros(shape, dtype=np.float64)
        for term in self.terms:
            prod = np.full(shape, float(term.gamma), dtype=np.float64)
            for positions, factor in term.factors.items():
                prod = prod * _broadcast_factor(factor.values, positions, shape)
            out = out + prod
        return out

    def evaluate(self, point) -> float:
        total = 0.0
        for term in self.terms:
            prod = float(term.gamma)
            for positions, factor in term.factors.items():
                prod *= float(factor.values[tuple(point[p] for p in positions)])
            total += prod
        return total

    def round_coefficients(self, height: int) -> "CylinderDecomposition":
        """Round every gamma to the nearest dyadic of the given height."""
        scale = 2 ** height
        rounded = tuple(
            CylinderTerm(Fraction(round(t.gamma * scale), scale), t.factors)
            for t in self.terms)
        return CylinderDecomposition(self.space, self.target_signature, self.k, rounded)

    def to_doc(self) -> dict:
        from .serialize import space_to_doc
        doc = space_to_doc(self.space)
        doc.update({
            "target_signature": list(self.target_signature),
            "k": self.k,
            "terms": [{
                "gamma": term.gamma,
                "factors": [{"positions": list(pos), "name": fac.name,
                             "values": fac.values.ravel()}
                            for pos, fac in term.factors.items()],
            } for term in self.terms],
        })
        return doc

    @staticmethod
    def from_doc(doc) -> "CylinderDecomposition":
        from .serialize import space_from_doc
        space = space_from_doc({"parts": doc["parts"]})
        sig = tuple(int(i) for i in doc["target_signature"])
        terms = []
        for rec in doc["terms"]:
            factors = {}
            for frec in rec["factors"]:
                positions = tuple(int(p) for p in frec["positions"])
                fsig = tuple(sig[p] for p in positions)
                vals = np.array([float(v) for v in frec["values"]],
                                dtype=np.float64).reshape(space.sizes(fsig))
                factors[positions] = MeasuredFunction(space, fsig, vals,
                                                      name=frec["name"])
            terms.append(CylinderTerm(parse_fraction(rec["gamma"]), factors))
        return CylinderDecomposition(space, sig, int(doc["k"]), tuple(terms))


@dataclass(frozen=True)
class FitReport:
    error: float
    n: int
    iterations: int
    seed: int
    baseline: float

    def to_doc(self) -> dict:
        return {"error": self.error, "n": self.n, "iterations": self.iterations,
                "seed": self.seed, "baseline": self.baseline}


def l2_error(f: MeasuredFunction, d: CylinderDecomposition) -> float:
    if tuple(f.signature) != d.target_signature:
        raise InvalidArgumentError("decomposition targets a different signature")
    w = f.space.weight_tensor(f.signature)
    diff = f.values - d.tensor()
    return math.sqrt(max(0.0, math.fsum((w * diff * diff).ravel().tolist())))


# --------------------------------------------------------------------------
# Boolean cylinder expressions


@dataclass(frozen=True)
class PoolLeaf:
    positions: tuple
    relation: Relation
    name: str


@dataclass(frozen=True)
class BooleanCylinderExpr:
    """Expression tree over named cylinder leaves.

    Nodes are nested tuples: ("leaf", name), ("not", node),
    ("and"/"or", left, right), ("const", bool).
    """

    root: tuple
    leaves: dict  # name -> PoolLeaf

    def leaf_occurrences(self) -> int:
        def count(node):
            tag = node[0]
            if tag == "leaf":
                return 1
            if tag == "const":
                return 0
            if tag == "not":
                return count(node[1])
            return count(node[1]) + count(node[2])
        return count(self.root)

    def tensor(self, space, signature) -> np.ndarray:
        shape = space.sizes(signature)

        def ev(node):
            tag = node[0]
            if tag == "const":
                return np.full(shape, bool(node[1]))
            if tag == "leaf":
                leaf = self.leaves.get(node[1])
                if leaf is None:
                    raise InvalidStateError(f"unresolved leaf {node[1]!r}")
                return np.broadcast_to(
                    _broadcast_factor(leaf.relation.bool_values, leaf.positions, shape),
                    shape)
            if tag == "not":
                return ~ev(node[1])
            if tag == "and":
                return ev(node[1]) & ev(node[2])
            if tag == "or":
                return ev(node[1]) | ev(node[2])
            raise InvalidStateError(f"unknown node tag {tag!r}")

        return ev(self.root)

    def evaluate(self, space, signature, point) -> bool:
        return bool(self.tensor(space, signature)[tuple(point)])

    def to_doc(self) -> dict:
        def encode(node):
            tag = node[0]
            if tag == "const":
                return {"op": "const", "value": bool(node[1])}
            if tag == "leaf":
                return {"op": "leaf", "name": node[1]}
            if tag == "not":
                return {"op": "not", "arg": encode(node[1])}
            return {"op": tag, "left": encode(node[1]), "right": encode(node[2])}

        return {"expr": encode(self.root),
                "leaves": {name: {"positions": list(leaf.positions),
                                  "values": leaf.relation.values.ravel()}
                           for name, leaf in self.leaves.items()}}


def sym_diff(E: MeasuredFunction, expr: BooleanCylinderExpr) -> float:
    """mu(E triangle F) under the space's product measure."""
    if not E.is_boolean():
        raise InvalidArgumentError("sym_diff needs a Boolean relation")
    w = E.space.weight_tensor(E.signature)
    fmask = expr.tensor(E.space, E.signature)
    diff = np.abs(E.values - fmask.astype(np.float64))
    return math.fsum((w * diff).ravel().tolist())


def sample_fiber_pool(E: MeasuredFunction, k: int, seed: int,
                      per_index: int = 8) -> list:
    """Candidate leaves: low-arity fibers of E at seeded parameter tuples.

    For each coordinate set I, ``per_index`` distinct tuples fixing the
    complementary coordinates are drawn (all of them when there are fewer);
    duplicate fiber relations keep their first occurrence, so the pool order
    is deterministic for the tie-breaking rule.
    """
    k_prime = E.arity
    leaves = []
    for counter, I in enumerate(index_sets(k_prime, k)):
        other = [p for p in range(k_prime) if p not in I]
        extents = [E.shape[p] for p in other]
        n_tuples = math.prod(extents) if other else 1
        if n_tuples <= per_index:
            flat_picks = range(n_tuples)
        else:
            draws = rng.integers(seed, rng.STREAM_POOL, 4 * per_index,
                                 n_tuples, counter).tolist()
            flat_picks = sorted(dict.fromkeys(draws))[:per_index]
        seen = set()
        for flat in flat_picks:
            tup = tuple(int(v) for v in np.unravel_index(int(flat), extents)) \
                if other else ()
            sub = fiber(E, dict(zip(other, tup)))
            if sub.values.tobytes() in seen:
                continue
            seen.add(sub.values.tobytes())
            name = f"fib|I={','.join(map(str, I))}|w={','.join(map(str, tup))}"
            leaves.append(PoolLeaf(I, Relation(E.space, sub.signature, sub.values,
                                               name=name), name))
    return leaves


def fit_boolean_cylinders(E: MeasuredFunction, k: int, n_max: int,
                          pool=None, seed: int = 0) -> tuple:
    """Greedy decision-list fit of a relation by cylinder-fiber leaves.

    Rules (leaf, polarity, output bit) are appended front to back.  While a
    rule exists that is homogeneous on the still-undecided region, the one
    with the largest (error reduction, coverage) is taken, lowest leaf index
    on ties; this reaches zero error whenever the target is a decision list
    over the pool.  Otherwise the rule with the largest symmetric-difference
    reduction is taken, and fitting stops when no rule strictly improves.
    """
    if not E.is_boolean():
        raise InvalidArgumentError("fit_boolean_cylinders needs a Boolean relation")
    if E.arity <= k:
        raise InvalidArgumentError(f"target arity {E.arity} must exceed k={k}")
    if pool is None:
        pool = sample_fiber_pool(E, k, seed)
    pool = list(pool)
    if not pool:
        raise InvalidArgumentError("empty candidate pool")

    shape = E.shape
    w = E.space.weight_tensor(E.signature).ravel()
    target = E.values.ravel() == 1.0
    masks = [np.broadcast_to(
        _broadcast_factor(leaf.relation.bool_values, leaf.positions, shape),
        shape).ravel() for leaf in pool]

    def mu(mask):
        return math.fsum(w[mask].tolist())

    remaining = np.ones(target.size, dtype=bool)
    decided_err = 0.0
    rules = []

    def default_err(region):
        in_e = mu(region & target)
        out_e = mu(region & ~target)
        return min(in_e, out_e)

    iterations = 0
    baseline = default_err(remaining)
    current = decided_err + default_err(remaining)
    while len(rules) < n_max and current > 0.0:
        iterations += 1
        best_homog = None   # ((reduction, cover), candidate)
        best_any = None     # (new_total, candidate)
        for li, mask in enumerate(masks):
            for negated in (False, True):
                region = remaining & (~mask if negated else mask)
                cover = mu(region)
                if cover <= 0.0:
                    continue
                for bit in (True, False):
                    mistakes = mu(region & (target != bit))
                    rest = remaining & ~region
                    new_total = decided_err + mistakes + default_err(rest)
                    cand = (li, negated, bit, region, mistakes)
                    if mistakes == 0.0:
                        key = (current - new_total, cover)
                        if best_homog is None or key > best_homog[0]:
                            best_homog = (key, cand)
                    if best_any is None or new_total < best_any[0]:
                        best_any = (new_total, cand)
        if best_homog is not None:
            _, (li, negated, bit, region, mistakes) = best_homog
        elif best_any is not None and best_any[0] < current:
            _, (li, negated, bit, region, mistakes) = best_any
        else:
            break
        rules.append((li, negated, bit))
        decided_err += mistakes
        remaining &= ~region
        current = decided_err + default_err(remaining)

    in_e = mu(remaining & target)
    out_e = mu(remaining & ~target)
    default_bit = in_e >= out_e
    error = decided_err + min(in_e, out_e)

    node = ("const", bool(default_bit))
    for li, negated, bit in reversed(rules):
        leaf_node = ("leaf", pool[li].name)
        test = ("not", leaf_node) if negated else leaf_node
        if bit:
            node = test if node == ("const", False) else ("or", test, node)
        else:
            inv = ("not", test)
            node = inv if node == ("const", True) else ("and", inv, node)
    expr = BooleanCylinderExpr(node, {leaf.name: leaf for leaf in pool})

    if error > baseline + defaults.MONOTONE_SLACK:
        raise NumericalFailureError(
            f"boolean fit error {error} exceeds constant baseline {baseline}")
    return expr, FitReport(error, expr.leaf_occurrences(), iterations, seed, baseline)


# --------------------------------------------------------------------------
# weighted fitting


def _weighted_error(f, w, gammas, products):
    approx = np.zeros_like(f)
    for g, p in zip(gammas, products):
        approx = approx + g * p
    diff = f - approx
    return math.sqrt(max(0.0, math.fsum((w * diff * diff).ravel().tolist())))


class _TermState:
    __slots__ = ("factors",)

    def __init__(self, factors):
        self.factors = factors  # dict positions -> np.ndarray

    def product(self, shape):
        prod = np.ones(shape, dtype=np.float64)
        for positions, vals in self.factors.items():
            prod = prod * _broadcast_factor(vals, positions, shape)
        return prod


def fit_weighted_cylinders(f: MeasuredFunction, k: int, n_max: int,
                           als_iters: int = defaults.ALS_ITERS,
                           seed: int = 0, init=None,
                           init_mode: str = "auto") -> tuple:
    """Greedy residual fitting of sum_i gamma_i * prod_I f_i_I(x_I).

    Each new term is seeded from the dominant pattern of the positive
    residual (or from seeded uniforms in ``init_mode="random"``), then
    refined by alternating minimization: every factor update is an exact
    per-entry weighted least squares clipped to [0, 1], and the coefficient
    vector is re-solved by bounded least squares after every sweep, so the
    error is non-increasing; a rise beyond tolerance raises.

    ``init`` may carry a decomposition to refine (oracle initialization);
    its terms are taken verbatim before any greedy additions.
    """
    k_prime = f.arity
    if k_prime <= k:
        raise InvalidArgumentError(f"target arity {k_prime} must exceed k={k}")
    shape = f.shape
    sets = index_sets(k_prime, k)
    w = f.space.weight_tensor(f.signature)
    target = f.values

    mean = min(1.0, max(0.0, integrate(f)))
    baseline = _weighted_error(target, w, [mean],
                               [np.ones(shape, dtype=np.float64)])

    terms: list = []
    gammas: list = []
    prods: list = []  # cached per-term factor products

    def add_state(state, gamma):
        terms.append(state)
        gammas.append(gamma)
        prods.append(state.product(shape))

    if init is not None:
        if tuple(init.target_signature) != tuple(f.signature):
            raise InvalidArgumentError("init decomposition targets a different signature")
        for t in init.terms:
            factors = {pos: np.array(fac.values) for pos, fac in t.factors.items()}
            for positions in sets:
                factors.setdefault(
                    positions,
                    np.ones(tuple(shape[p] for p in positions), dtype=np.float64))
            add_state(_TermState(factors), float(t.gamma))

    def current_error():
        return _weighted_error(target, w, gammas, prods)

    def solve_gammas():
        if not terms:
            return
        sw = np.sqrt(w).ravel()
        A = np.stack([(p.ravel() * sw) for p in prods], axis=1)
        b = target.ravel() * sw
        res = lsq_linear(A, b, bounds=(0.0, 1.0), method="bvls")
        gammas[:] = [float(g) for g in res.x]

    def update_factor(ti, positions):
        others = np.zeros(shape, dtype=np.float64)
        for j, (g, p) in enumerate(zip(gammas, prods)):
            if j != ti:
                others = others + g * p
        resid = target - others
        partial = np.full(shape, gammas[ti], dtype=np.float64)
        for pos2, vals in terms[ti].factors.items():
            if pos2 != positions:
                partial = partial * _broadcast_factor(vals, pos2, shape)
        axes = tuple(p for p in range(k_prime) if p not in positions)
        num = np.sum(w * resid * partial, axis=axes)
        den = np.sum(w * partial * partial, axis=axes)
        old = terms[ti].factors[positions]
        with np.errstate(invalid="ignore", divide="ignore"):
            new = np.where(den > 0.0, np.clip(num / np.maximum(den, 1e-300), 0.0, 1.0),
                           old)
        terms[ti].factors[positions] = new
        prods[ti] = terms[ti].product(shape)

    def als(sweeps):
        nonlocal iterations
        err = current_error()
        for _ in range(sweeps):
            for ti in range(len(terms)):
                for positions in sets:
                    update_factor(ti, positions)
            solve_gammas()
            iterations += 1
            new_err = current_error()
            if new_err > err + defaults.MONOTONE_SLACK:
                raise NumericalFailureError(
                    f"alternating minimization error rose {err} -> {new_err}")
            if err - new_err < 1e-14:
                err = new_err
                break
            err = new_err
        return err

    def seeded_term(counter):
        resid = target - sum((g * p for g, p in zip(gammas, prods)),
                             np.zeros(shape, dtype=np.float64))
        pos_resid = np.maximum(resid, 0.0)
        if init_mode == "random":
            factors = {}
            for ci, positions in enumerate(sets):
                fshape = tuple(shape[p] for p in positions)
                n_entries = int(np.prod(fshape))
                factors[positions] = rng.uniforms(
                    seed, rng.STREAM_INIT, n_entries,
                    (counter << 8) | ci).reshape(fshape)
            return _TermState(factors)
        if not np.any(pos_resid > 0.0):
            return None
        anchor = np.unravel_index(int(np.argmax(pos_resid)), shape)
        factors = {}
        for positions in sets:
            others = {p: anchor[p] for p in range(k_prime) if p not in positions}
            sl = np.array(pos_resid[tuple(others.get(p, slice(None))
                                          for p in range(k_prime))])
            peak = float(sl.max())
            factors[positions] = (sl / peak if peak > 0.0 else np.ones_like(sl))
        return _TermState(factors)

    iterations = 0
    err = als(als_iters) if terms else current_error()

    counter = 0
    while len(terms) < n_max and err > defaults.FIT_ZERO_TOL:
        counter += 1
        state = seeded_term(counter)
        if state is None:
            break
        add_state(state, 0.0)
        solve_gammas()
        new_err = als(als_iters)
        if len(terms) == 1 and init is None and init_mode == "auto":
            # a constant term starts exactly at the baseline; keep the better
            const_state = _TermState(
                {pos: np.ones(tuple(shape[p] for p in pos)) for pos in sets})
            backup = (terms[:], gammas[:], prods[:])
            terms[:] = [const_state]
            gammas[:] = [mean]
            prods[:] = [const_state.product(shape)]
            alt_err = als(als_iters)
            if alt_err < new_err:
                new_err = alt_err
            else:
                terms[:], gammas[:], prods[:] = backup
        err = new_err

    final_terms = tuple(
        CylinderTerm(Fraction(float(g)),
                     {pos: MeasuredFunction(f.space,
                                            tuple(f.signature[p] for p in pos),
                                            np.array(vals),
                                            name=f"t{i}_{'_'.join(map(str, pos))}")
                      for pos, vals in t.factors.items()})
        for i, (g, t) in enumerate(zip(gammas, terms)))
    decomposition = CylinderDecomposition(f.space, f.signature, k, final_terms)
    final_err = l2_error(f, decomposition)
    if final_err > baseline + defaults.MONOTONE_SLACK:
        raise NumericalFailureError(
            f"weighted fit error {final_err} exceeds constant baseline {baseline}")
    report = FitReport(final_err, len(final_terms), iterations, seed, baseline)
    return decomposition, report


# --------------------------------------------------------------------------
# anchor selection for fiber approximation


@dataclass(frozen=True)
class FiberApproxReport:
    anchors: tuple
    max_error: float
    met_epsilon: bool
    per_fiber: tuple  # (vertex, error) pairs for the final anchor set

    def to_doc(self) -> dict:
        return {"anchors": list(self.anchors), "max_error": self.max_error,
                "met_epsilon": self.met_epsilon,
                "per_fiber": [{"vertex": v, "error": e} for v, e in self.per_fiber]}


def approx_by_fibers(f: MeasuredFunction, eps: float, anchors_budget: int,
                     spec: FiberFamilySpec, seed: int = 0) -> FiberApproxReport:
    """Greedy anchor selection until every fiber projects within eps.

    For each candidate vertex x of the distinguished (last) coordinate, the
    fiber of f at x is projected onto the algebra generated by the cylinder
    fiber family at (anchors + x) together with the dyadic level sets of the
    anchors' own fibers.  The worst-approximated x joins the anchor list;
    the report is flagged when the budget runs out above eps.
    """
    dist = f.arity - 1
    k = f.arity - 1
    if k < 1:
        raise InvalidArgumentError("need arity >= 2")
    part_size = f.shape[dist]
    anchors: list = []

    def projection_error(x, current):
        generators = fiber_family(
            f, FiberFamilySpec(spec.height, tuple(current) + (x,), spec.params))
        for a in current:
            fa = fiber(f, {dist: a})
            for q in dyadics(spec.height):
                generators.append(level_set(fa, float(q), "<",
                                            name=f"{f.name}[b={a}]<{q}"))
        partition = atoms(generators) if generators else atoms(
            [], space=f.space, signature=f.signature[:k])
        fx = fiber(f, {dist: x})
        _, err = project_simple(fx, partition)
        return err

    while True:
        errors = [(projection_error(x, anchors), x) for x in range(part_size)]
        worst_err, worst_x = max(errors, key=lambda t: (t[0], -t[1]))
        if worst_err <= eps:
            return FiberApproxReport(tuple(anchors), worst_err, True,
                                     tuple((x, e) for e, x in errors))
        if len(anchors) >= anchors_budget:
            return FiberApproxReport(tuple(anchors), worst_err, False,
                                     tuple((x, e) for e, x in errors))
        anchors.append(worst_x)
