"""Exact samplers for geometric Galton-Watson trees and their local limits.

Five generators live here: the plain branching process, the generation-size
bridge for trees conditioned on {Z_n = a}, the Kesten spine tree, the
Poisson-immigration skeleton, and the condensation tree (in both of its
equivalent constructions). Each one consumes an explicit RandomSource and is
reproducible bit for bit from the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import AuditError, ResourceError, TruncationError, ValidationError
from .exactlaw import log_forest_pmf
from .logspace import LOG_ZERO, log_add
from .offspring import (
    OffspringParams,
    condensation_offspring_params,
    extinction_params,
    immigration_rate,
    survivor_offspring_param,
)
from .rng import RandomSource
from .treekit import OrderedTree

DEFAULT_MAX_NODES = 1_000_000

# Mass of the bridge kernel that the support scan must account for before a
# draw is accepted; anything less raises TruncationError.
BRIDGE_RTOL = 1e-12


class _Budget:
    """Shared node counter so one sample cannot grow without bound."""

    __slots__ = ("left", "cap")

    def __init__(self, cap: int):
        self.left = cap
        self.cap = cap

    def spend(self, count: int = 1) -> None:
        self.left -= count
        if self.left < 0:
            raise ResourceError(f"sampled tree exceeded the {self.cap}-node cap")


@dataclass(frozen=True)
class TypedTree:
    """An ordered tree plus the set of survivor-type vertices.

    Survivors are stored as child-index paths from the root; the root itself
    is the empty tuple. The plain tree is in `tree` and carries no types.
    """

    tree: OrderedTree
    survivors: frozenset

    def survivors_at(self, level: int) -> frozenset:
        return frozenset(u for u in self.survivors if len(u) == level)

    def survivor_counts(self, depth: int) -> list[int]:
        """Number of survivors per level, for levels 0 .. depth."""
        counts = [0] * (depth + 1)
        for u in self.survivors:
            counts[len(u)] += 1
        return counts

    def flag_string(self) -> str:
        """One character per node in preorder: 1 survivor, 0 extinction.

        Rides next to OrderedTree.encode() as a sidecar column in sampler
        output, so a typed tree round-trips through two text fields.
        """
        return "".join(
            "1" if path in self.survivors else "0"
            for path in preorder_paths(self.tree)
        )


def typed_tree_from_strings(code: str, flags: str) -> TypedTree:
    """Rebuild a TypedTree from OrderedTree.encode() plus its flag column."""
    tree = OrderedTree.decode(code)
    paths = preorder_paths(tree)
    if len(flags) != len(paths):
        raise ValidationError(
            f"flag column length {len(flags)} does not match {len(paths)} nodes"
        )
    survivors = frozenset(
        path for path, bit in zip(paths, flags) if bit == "1"
    )
    return TypedTree(tree, survivors)


def preorder_paths(tree: OrderedTree) -> list[tuple]:
    """Child-index path of every node, aligned with tree.degrees."""
    paths: list[tuple] = []
    stack: list[list] = []  # [path, degree, children already placed]
    for idx, deg in enumerate(tree.degrees):
        if idx == 0:
            path: tuple = ()
        else:
            while stack and stack[-1][2] == stack[-1][1]:
                stack.pop()
            parent_path, _, used = stack[-1]
            path = parent_path + (used,)
            stack[-1][2] = used + 1
        paths.append(path)
        stack.append([path, deg, 0])
    return paths


# ---------------------------------------------------------------------------
# plain trees and the conditioned bridge


def sample_gw(
    p: OffspringParams,
    rng: RandomSource,
    depth: int,
    max_nodes: int = DEFAULT_MAX_NODES,
) -> OrderedTree:
    """One branching tree truncated at `depth`, grown level by level."""
    if depth < 0:
        raise ValidationError(f"depth must be >= 0, got {depth}")
    levels = []
    width = 1
    total = 1
    for _ in range(depth):
        degs = [rng.offspring(p) for _ in range(width)]
        levels.append(degs)
        width = sum(degs)
        total += width
        if total > max_nodes:
            raise ResourceError(f"sampled tree exceeded the {max_nodes}-node cap")
        if width == 0:
            return OrderedTree.from_level_degrees(levels)
    levels.append([0] * width)
    return OrderedTree.from_level_degrees(levels)


@lru_cache(maxsize=262144)
def _cached_forest(eta: float, q: float, k: int, gens: int, a: int) -> float:
    return log_forest_pmf(OffspringParams(eta, q), k, gens, a)


def _bridge_step(
    p: OffspringParams, z: int, gens_after: int, a: int, rng: RandomSource
) -> int:
    """Draw the next generation size of the conditioned chain.

    Given the current size z with gens_after generations still to go before
    the pinned endpoint a, size b carries weight
    forest(z, 1, b) * forest(b, gens_after, a), and the normalizer is
    forest(z, gens_after + 1, a) by one-step decomposition.
    """
    if gens_after == 0:
        return a
    log_total = _cached_forest(p.eta, p.q, z, gens_after + 1, a)
    log_u = math.log(rng.uniform())
    acc = LOG_ZERO
    cap = 1024 + 64 * (z + a)
    b = 0
    while b < cap:
        b += 1
        lw = _cached_forest(p.eta, p.q, z, 1, b) + _cached_forest(
            p.eta, p.q, b, gens_after, a
        )
        acc = log_add(acc, lw)
        if acc - log_total >= log_u:
            return b
    if acc - log_total < math.log1p(-BRIDGE_RTOL):
        raise TruncationError(
            "bridge kernel scan stopped at b="
            f"{cap} covering only exp({acc - log_total}) of the mass"
        )
    # The scan certified all but < BRIDGE_RTOL of the kernel and the draw
    # fell in that sliver; the largest scanned size is the honest answer.
    return cap


def _allocate(p: OffspringParams, z: int, b: int, rng: RandomSource) -> list[int]:
    """Split b children among z ordered parents as iid draws given the sum."""
    degs = []
    s = b
    for j in range(z - 1):
        log_den = _cached_forest(p.eta, p.q, z - j, 1, s)
        u = rng.uniform()
        cum = 0.0
        x = 0
        while True:
            lx = p.log_pmf(x) + _cached_forest(p.eta, p.q, z - j - 1, 1, s - x)
            cum += math.exp(lx - log_den)
            if u < cum or x == s:
                break
            x += 1
        degs.append(x)
        s -= x
    degs.append(s)
    return degs


def sample_conditioned(
    p: OffspringParams,
    n: int,
    a: int,
    rng: RandomSource,
    depth: int,
    max_nodes: int = DEFAULT_MAX_NODES,
) -> OrderedTree:
    """One tree distributed as the depth-restriction of GW(p) given Z_n = a.

    Runs the generation-size Markov bridge first, then fills in each level
    by allocating offspring counts left to right in Neveu order.
    """
    if a < 1:
        raise ValidationError(f"target generation size must be >= 1, got {a}")
    if not 1 <= depth <= n:
        raise ValidationError(f"need 1 <= depth <= n, got depth={depth}, n={n}")
    sizes = [1]
    total = 1
    for m in range(depth):
        nxt = _bridge_step(p, sizes[-1], n - m - 1, a, rng)
        sizes.append(nxt)
        total += nxt
        if total > max_nodes:
            raise ResourceError(f"sampled tree exceeded the {max_nodes}-node cap")
    levels = [_allocate(p, sizes[m], sizes[m + 1], rng) for m in range(depth)]
    levels.append([0] * sizes[depth])
    return OrderedTree.from_level_degrees(levels)


# ---------------------------------------------------------------------------
# limit trees


def _grow_plain(
    law: OffspringParams, rng: RandomSource, levels_left: int, budget: _Budget
) -> list[int]:
    """Preorder degrees of one GW(law) bush truncated levels_left down."""
    budget.spend()
    if levels_left == 0:
        return [0]
    k = rng.offspring(law)
    out = [k]
    for _ in range(k):
        out.extend(_grow_plain(law, rng, levels_left - 1, budget))
    return out


def sample_kesten(
    p: OffspringParams,
    rng: RandomSource,
    depth: int,
    max_nodes: int = DEFAULT_MAX_NODES,
) -> TypedTree:
    """Kesten tree truncated at `depth`: one survivor spine, mirrored-law
    bushes everywhere else.

    Each spine node draws its total degree from the once-size-biased law,
    places the unique surviving child uniformly, and the remaining children
    grow independent subcritical-or-critical bushes.
    """
    if p.eta >= 1.0:
        raise ValidationError("the Kesten tree needs eta < 1")
    if depth < 0:
        raise ValidationError(f"depth must be >= 0, got {depth}")
    ext = extinction_params(p)
    qhat = ext.law.q
    budget = _Budget(max_nodes)

    def spine(level: int) -> tuple[list[int], list[tuple]]:
        budget.spend()
        if level == depth:
            return [0], [()]
        k = rng.size_biased_total(qhat, 1)
        pos = rng.below(k)
        degs = [k]
        paths: list[tuple] = [()]
        for i in range(k):
            if i == pos:
                sub, subpaths = spine(level + 1)
                degs.extend(sub)
                paths.extend((i,) + sp for sp in subpaths)
            else:
                degs.extend(_grow_plain(ext.law, rng, depth - level - 1, budget))
        return degs, paths

    degs, paths = spine(0)
    return TypedTree(OrderedTree(degs), frozenset(paths))


def _flatten_skeleton(
    children: dict,
    law: OffspringParams,
    rng: RandomSource,
    depth: int,
    budget: _Budget,
) -> list[int]:
    """Materialize a survivor skeleton into preorder degrees, drawing the
    extinction bushes on the way (preorder, so the draw order is fixed)."""

    def visit(path: tuple, level: int) -> list[int]:
        budget.spend()
        if level == depth:
            return [0]
        k, spos = children[path]
        out = [k]
        for i in range(k):
            if i in spos:
                out.extend(visit(path + (i,), level + 1))
            else:
                out.extend(_grow_plain(law, rng, depth - level - 1, budget))
        return out

    return visit((), 0)


def sample_poisson_tree(
    p: OffspringParams,
    theta: float,
    rng: RandomSource,
    depth: int,
    max_nodes: int = DEFAULT_MAX_NODES,
) -> TypedTree:
    """Poisson-immigration skeleton truncated at `depth`.

    Level by level: the number of new survivor slots is Poisson with mean
    theta times the level intensity, the slots spread over the current
    survivors uniformly among positive compositions, each survivor then
    draws its total degree from the size-biased law of its survivor count
    and scatters those children uniformly. Extinction nodes grow plain
    bushes on the mirrored law.
    """
    if not theta > 0.0:
        raise ValidationError(f"theta must be > 0, got {theta}")
    if depth < 0:
        raise ValidationError(f"depth must be >= 0, got {depth}")
    ext = extinction_params(p)
    qhat = ext.law.q
    budget = _Budget(max_nodes)
    children: dict = {}
    level_paths: list[tuple] = [()]
    for h in range(depth):
        delta = rng.poisson(theta * immigration_rate(p, h))
        counts = rng.positive_composition(len(level_paths) + delta, len(level_paths))
        nxt: list[tuple] = []
        for u, s_u in zip(level_paths, counts):
            k_u = rng.size_biased_total(qhat, s_u)
            pos = rng.uniform_subset(k_u, s_u)
            children[u] = (k_u, frozenset(pos))
            nxt.extend(u + (i,) for i in pos)
        level_paths = nxt
    survivors = frozenset(children) | frozenset(level_paths)
    degs = _flatten_skeleton(children, ext.law, rng, depth, budget)
    return TypedTree(OrderedTree(degs), survivors)


def sample_condensation(
    p: OffspringParams,
    k0: int,
    rng: RandomSource,
    depth: int,
    variant: str = "two_type",
    max_nodes: int = DEFAULT_MAX_NODES,
):
    """Condensation tree seen through the first k0 children of the root.

    The root of the full object has infinitely many children, so only the
    (depth, k0)-restricted view is ever materialized. Two constructions of
    the same law sit behind the `variant` switch:

      "inhomogeneous": every node at depth m >= 1 draws the depth-m tilted
          offspring law; returns a plain OrderedTree.
      "two_type": the first k0 root children are survivors independently
          with probability max(q, eta); a survivor at depth h draws its
          number of surviving children geometrically on {1, 2, ...}, its
          total degree from the matching size-biased law, scatters the
          survivors uniformly, and extinction nodes grow mirrored-law
          bushes; returns a TypedTree.
    """
    if k0 < 1:
        raise ValidationError(f"k0 must be >= 1, got {k0}")
    if depth < 1:
        raise ValidationError(f"depth must be >= 1, got {depth}")
    budget = _Budget(max_nodes)
    if variant == "inhomogeneous":
        return _condensation_inhom(p, k0, rng, depth, budget)
    if variant == "two_type":
        return _condensation_two_type(p, k0, rng, depth, budget)
    raise ValidationError(f"unknown condensation variant {variant!r}")


def _condensation_inhom(
    p: OffspringParams, k0: int, rng: RandomSource, depth: int, budget: _Budget
) -> OrderedTree:
    laws = {m: condensation_offspring_params(p, m) for m in range(1, depth)}

    def node(m: int) -> list[int]:
        budget.spend()
        if m == depth:
            return [0]
        k = rng.offspring(laws[m])
        out = [k]
        for _ in range(k):
            out.extend(node(m + 1))
        return out

    budget.spend()
    degs = [k0]
    for _ in range(k0):
        degs.extend(node(1))
    return OrderedTree(degs)


def _condensation_two_type(
    p: OffspringParams, k0: int, rng: RandomSource, depth: int, budget: _Budget
) -> TypedTree:
    ext = extinction_params(p)
    qhat = ext.law.q
    root_surv = frozenset(i for i in range(k0) if rng.uniform() < qhat)
    children: dict = {(): (k0, root_surv)}
    level_paths: list[tuple] = [(i,) for i in sorted(root_surv)]
    for h in range(1, depth):
        nu = survivor_offspring_param(p, h)
        nxt: list[tuple] = []
        for u in level_paths:
            s_u = rng.geometric_pos(nu)
            k_u = rng.size_biased_total(qhat, s_u)
            pos = rng.uniform_subset(k_u, s_u)
            children[u] = (k_u, frozenset(pos))
            nxt.extend(u + (i,) for i in pos)
        level_paths = nxt
    survivors = frozenset(children) | frozenset(level_paths)
    degs = _flatten_skeleton(children, ext.law, rng, depth, budget)
    return TypedTree(OrderedTree(degs), survivors)


# ---------------------------------------------------------------------------
# audits


def _audit_membership(tt: TypedTree, depth: int) -> None:
    nodes = set(preorder_paths(tt.tree))
    for u in tt.survivors:
        if u not in nodes:
            raise AuditError(f"survivor path {u} is not a node of the tree")
        if len(u) > depth:
            raise AuditError(f"survivor path {u} lies below level {depth}")
        if u and u[:-1] not in tt.survivors:
            raise AuditError(f"survivor {u} has a non-survivor parent")
    if () not in tt.survivors:
        raise AuditError("the root is not a survivor")


def audit_spine(tt: TypedTree, depth: int) -> None:
    """Kesten invariants: survival is a single chain from root to level
    `depth`, one survivor per level. Raises AuditError otherwise."""
    _audit_membership(tt, depth)
    counts = tt.survivor_counts(depth)
    for level, c in enumerate(counts):
        if c != 1:
            raise AuditError(f"level {level} holds {c} survivors, wanted 1")


def audit_skeleton(tt: TypedTree, depth: int, allow_barren_root: bool = False) -> None:
    """Skeleton invariants: the root survives, survival is closed under
    taking parents, and every survivor short of the horizon has a surviving
    child. A condensation view keeps only k0 of the root's infinitely many
    children, so its root may legitimately end up barren; pass
    allow_barren_root=True there."""
    _audit_membership(tt, depth)
    with_children = {u[:-1] for u in tt.survivors if u}
    for u in tt.survivors:
        if len(u) < depth and u not in with_children:
            if u == () and allow_barren_root:
                continue
            raise AuditError(f"survivor {u} at level {len(u)} has no survivor child")
