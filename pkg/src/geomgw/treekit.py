"""Finite rooted ordered trees, truncation maps, and exhaustive enumeration.

A tree is stored as the tuple of out-degrees in depth-first (preorder)
order, children visited left to right. This encoding is unique for
ordered trees, cheap to hash, and turns the two truncation maps the
package cares about into simple sequence surgery:

    restrict(h)        keep nodes of depth <= h, zero out degrees at depth h
    restrict_k(h, k0)  additionally keep only the root's first k0 subtrees

The text form used in CSV output and on the command line is the same
tuple joined by commas, e.g. "2,1,0,0,0" for a root with two children,
the first of which has one child.
"""
from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Sequence

from .errors import ResourceError, ValidationError


class OrderedTree:
    """Immutable rooted ordered tree backed by its preorder degree tuple."""

    __slots__ = ("_degrees", "_depths", "_parents", "_hash")

    def __init__(self, degrees: Iterable[int]):
        degs = tuple(int(d) for d in degrees)
        if not degs:
            raise ValidationError("a tree has at least its root")
        depths = [0]
        # stack holds the not-yet-satisfied child counts along the current
        # root-to-node path; the walk doubles as the validity check
        stack = []
        if degs[0] < 0:
            raise ValidationError("degrees must be non-negative")
        if degs[0] > 0:
            stack.append(degs[0])
        for d in degs[1:]:
            if d < 0:
                raise ValidationError("degrees must be non-negative")
            if not stack:
                raise ValidationError(f"degree sequence {degs!r} has orphan nodes")
            depths.append(len(stack))
            stack[-1] -= 1
            if d > 0:
                stack.append(d)
            else:
                while stack and stack[-1] == 0:
                    stack.pop()
        if stack:
            raise ValidationError(f"degree sequence {degs!r} is missing children")
        self._degrees = degs
        self._depths = tuple(depths)
        self._parents = None
        self._hash = None

    # -- basic accessors -------------------------------------------------

    @property
    def degrees(self) -> tuple[int, ...]:
        return self._degrees

    @property
    def depths(self) -> tuple[int, ...]:
        return self._depths

    @property
    def size(self) -> int:
        return len(self._degrees)

    @property
    def height(self) -> int:
        return max(self._depths)

    @property
    def root_degree(self) -> int:
        return self._degrees[0]

    def z(self, depth: int) -> int:
        """Number of nodes at exactly the given depth."""
        if depth < 0:
            raise ValidationError(f"depth must be >= 0, got {depth}")
        return sum(1 for d in self._depths if d == depth)

    def max_degree(self) -> int:
        return max(self._degrees)

    def parents(self) -> tuple[int, ...]:
        """Preorder index of each node's parent (-1 for the root)."""
        if self._parents is None:
            par = [-1]
            stack = []  # (node index, children still owed)
            if self._degrees[0] > 0:
                stack.append([0, self._degrees[0]])
            for i, d in enumerate(self._degrees[1:], start=1):
                par.append(stack[-1][0])
                stack[-1][1] -= 1
                if d > 0:
                    stack.append([i, d])
                else:
                    while stack and stack[-1][1] == 0:
                        stack.pop()
            self._parents = tuple(par)
        return self._parents

    # -- truncation maps -------------------------------------------------

    def restrict(self, h: int) -> "OrderedTree":
        """Ball of radius h around the root: drop nodes deeper than h and
        zero the degrees of nodes at depth exactly h."""
        if h < 0:
            raise ValidationError(f"radius must be >= 0, got {h}")
        out = []
        for d, dep in zip(self._degrees, self._depths):
            if dep < h:
                out.append(d)
            elif dep == h:
                out.append(0)
        return OrderedTree(out)

    def restrict_k(self, h: int, k0: int) -> "OrderedTree":
        """Like restrict(h), but first keep only the root's leftmost k0
        subtrees (the root's degree becomes min(root_degree, k0))."""
        if k0 < 0:
            raise ValidationError(f"subtree count must be >= 0, got {k0}")
        d0 = self._degrees[0]
        if d0 <= k0:
            return self.restrict(h)
        starts = [i for i, dep in enumerate(self._depths) if dep == 1]
        starts.append(len(self._degrees))
        cut = starts[k0]  # first node of the (k0+1)-th subtree
        return OrderedTree((k0,) + self._degrees[1:cut]).restrict(h)

    # -- conversions -----------------------------------------------------

    def encode(self) -> str:
        return ",".join(str(d) for d in self._degrees)

    @classmethod
    def decode(cls, text: str) -> "OrderedTree":
        parts = text.strip().split(",")
        try:
            degs = [int(p) for p in parts]
        except ValueError as exc:
            raise ValidationError(f"bad tree code {text!r}") from exc
        return cls(degs)

    @classmethod
    def from_level_degrees(cls, levels: Sequence[Sequence[int]]) -> "OrderedTree":
        """Build a tree from per-level degree lists.

        levels[m] lists the out-degrees of the depth-m nodes in
        left-to-right order; level m+1 must contain exactly sum(levels[m])
        entries, and the final level must consist of zeros (explicitly).
        This is the natural output shape of the level-by-level samplers.
        """
        if not levels or len(levels[0]) != 1:
            raise ValidationError("level lists must start with the root level")
        for m in range(len(levels) - 1):
            if sum(levels[m]) != len(levels[m + 1]):
                raise ValidationError(
                    f"level {m} announces {sum(levels[m])} children but level "
                    f"{m + 1} has {len(levels[m + 1])} nodes"
                )
        if sum(levels[-1]) != 0:
            raise ValidationError("the last level must close the tree with zeros")
        offsets = [list(itertools.accumulate(lev, initial=0)) for lev in levels]
        out = []
        stack = [(0, 0)]
        while stack:
            m, i = stack.pop()
            d = levels[m][i]
            out.append(d)
            base = offsets[m][i]
            for j in reversed(range(d)):
                stack.append((m + 1, base + j))
        return cls(out)

    def level_degrees(self) -> list[list[int]]:
        """Inverse of from_level_degrees."""
        H = self.height
        out: list[list[int]] = [[] for _ in range(H + 1)]
        for d, dep in zip(self._degrees, self._depths):
            out[dep].append(d)
        return out

    # -- dunder ----------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OrderedTree):
            return NotImplemented
        return self._degrees == other._degrees

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._degrees)
        return self._hash

    def __repr__(self) -> str:
        return f"OrderedTree({self.encode()!r})"


def local_distance(t: OrderedTree, s: OrderedTree) -> float:
    """2^-(largest radius m with restrict_k(m, m) images equal), 0 if t == s.

    This is the ultrametric the convergence statements are phrased in.
    The radius-0 images always coincide, so the distance is at most 1.
    """
    if t == s:
        return 0.0
    m = 1
    while t.restrict_k(m, m) == s.restrict_k(m, m):
        m += 1
    return 2.0 ** (-(m - 1))


# -- enumeration ---------------------------------------------------------

_MEMO: dict[tuple[int, int], tuple[tuple[tuple[int, ...], int], ...]] = {}


def _pool(height: int, degree_cap: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    """All degree tuples of height <= `height` with degrees <= degree_cap,
    paired with their exact heights. Memoized."""
    key = (height, degree_cap)
    got = _MEMO.get(key)
    if got is not None:
        return got
    if height == 0:
        out: tuple[tuple[tuple[int, ...], int], ...] = (((0,), 0),)
    else:
        below = _pool(height - 1, degree_cap)
        acc: list[tuple[tuple[int, ...], int]] = [((0,), 0)]
        for d in range(1, degree_cap + 1):
            for combo in itertools.product(below, repeat=d):
                degs: tuple[int, ...] = (d,)
                hmax = 0
                for sub, sh in combo:
                    degs = degs + sub
                    if sh > hmax:
                        hmax = sh
                acc.append((degs, hmax + 1))
        out = tuple(acc)
    _MEMO[key] = out
    return out


def count_trees(
    height: int,
    degree_cap: int,
    exact_height: bool = False,
    root_degree: int | None = None,
) -> int:
    """Number of trees enumerate_trees would yield, by closed recurrence.

    Free root, height <= h:  N(h) = sum_{d=0}^{D} N(h-1)^d, N(0) = 1.
    The filters are inclusion-exclusion on top of N. Exact integers.
    """
    if height < 0 or degree_cap < 0:
        raise ValidationError("height and degree_cap must be >= 0")

    def upto(hh: int) -> int:
        if hh < 0:
            return 0
        n = 1
        for _ in range(hh):
            n = sum(n**d for d in range(degree_cap + 1))
        return n

    if root_degree is None:
        total = upto(height)
        if exact_height:
            total -= upto(height - 1)
        return total
    if root_degree > degree_cap:
        return 0
    if root_degree == 0:
        if exact_height:
            return 1 if height == 0 else 0
        return 1
    if height == 0:
        return 0
    total = upto(height - 1) ** root_degree
    if exact_height:
        total -= upto(height - 2) ** root_degree
    return total


def enumerate_trees(
    height: int,
    degree_cap: int,
    exact_height: bool = False,
    root_degree: int | None = None,
    max_trees: int = 5_000_000,
) -> Iterator[OrderedTree]:
    """Yield every tree of height <= `height` (or exactly, with the flag)
    whose out-degrees are all <= degree_cap, optionally with the root
    degree pinned. Raises ResourceError up front if either the yielded
    count or the number of candidate shapes walked to produce it exceeds
    max_trees; both counts are exact, so the guard never lies."""
    n = count_trees(height, degree_cap, exact_height, root_degree)
    if n > max_trees:
        raise ResourceError(
            f"enumeration would produce {n} trees, above the cap of {max_trees}"
        )
    walked = count_trees(height, degree_cap, False, root_degree)
    if walked > max_trees:
        raise ResourceError(
            f"enumeration would walk {walked} candidate trees, above the cap "
            f"of {max_trees}"
        )
    if root_degree is not None and root_degree > degree_cap:
        return
    if root_degree is None:
        for degs, h in _pool(height, degree_cap):
            if exact_height and h != height:
                continue
            yield OrderedTree(degs)
        return
    if root_degree == 0:
        if not exact_height or height == 0:
            yield OrderedTree((0,))
        return
    if height == 0:
        return
    # Pinned positive root degree: take products over the height-1 pool
    # instead of filtering the (possibly astronomically larger) full pool.
    below = _pool(height - 1, degree_cap)
    for combo in itertools.product(below, repeat=root_degree):
        degs: tuple[int, ...] = (root_degree,)
        hmax = 0
        for sub, sh in combo:
            degs = degs + sub
            if sh > hmax:
                hmax = sh
        if exact_height and hmax + 1 != height:
            continue
        yield OrderedTree(degs)
