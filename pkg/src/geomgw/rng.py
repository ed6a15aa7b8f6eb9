"""Deterministic randomness with a stable, documented derivation scheme.

All sampling in the package flows through RandomSource. The base layer is
numpy's PCG64; on top of it only two primitive draws are ever made
(uniform floats and bounded integers), so a sampler's entire consumption
pattern can be audited draw by draw. Substreams are derived by hashing
the parent seed with SHA-256 rather than with Python's hash(), which is
salted per process and would break run-to-run reproducibility.

The scheme is named so output files can record exactly how their
randomness was produced:

    pcg64-sha256split-v1
        root:   PCG64 seeded with the user seed
        child i: PCG64 seeded with the first 8 bytes (big endian) of
                 SHA-256(b"<parent seed>/<i>")
"""
from __future__ import annotations

import hashlib
import math

import numpy as np

from .errors import ValidationError

ALGORITHM = "pcg64-sha256split-v1"


class RandomSource:
    """Seeded random source: two primitive draws plus the exact
    distribution inverters the samplers need."""

    def __init__(self, seed: int):
        if not isinstance(seed, int):
            raise ValidationError("seed must be an integer")
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def child(self, index: int) -> "RandomSource":
        """Independent substream number `index`, derived by hashing."""
        digest = hashlib.sha256(f"{self.seed}/{index}".encode()).digest()
        return RandomSource(int.from_bytes(digest[:8], "big"))

    # -- primitive draws --------------------------------------------------

    def uniform(self) -> float:
        """One float in [0, 1)."""
        return float(self._gen.random())

    def below(self, n: int) -> int:
        """One integer uniform on {0, ..., n-1}."""
        if n < 1:
            raise ValidationError(f"need a positive range, got {n}")
        return int(self._gen.integers(n))

    # -- exact inverters ---------------------------------------------------

    def geometric0(self, q: float) -> int:
        """Failures before the first success: P(j) = q (1-q)^j, j >= 0."""
        u = self.uniform()
        return int(math.log1p(-u) // math.log1p(-q))

    def geometric_pos(self, q: float) -> int:
        """Trials to the first success: P(s) = q (1-q)^(s-1), s >= 1."""
        return 1 + self.geometric0(q)

    def offspring(self, p) -> int:
        """One draw from an OffspringParams law, by single-uniform inversion
        from the top of the tail: u < 1-eta gives 0, otherwise the count is
        read off the geometric tail of the remaining mass."""
        u = self.uniform()
        if u < 1.0 - p.eta:
            return 0
        v = (1.0 - u) / p.eta  # in (0, 1]
        return 1 + int(math.log(v) // math.log1p(-p.q))

    def size_biased_total(self, q: float, s: int) -> int:
        """Total child count of a node carrying s marked lines under the
        s-th order size-biased geometric law C(n,s) q^(s+1) (1-q)^(n-s):
        s plus the failures around s+1 successes of a q-coin."""
        if s < 1:
            raise ValidationError(f"marked line count must be >= 1, got {s}")
        n = s
        for _ in range(s + 1):
            n += self.geometric0(q)
        return n

    def poisson(self, lam: float) -> int:
        """Poisson by cdf inversion, splitting large means exactly through
        additivity (a Poisson sum of halves is Poisson) so no normal
        approximation ever enters."""
        if lam < 0.0:
            raise ValidationError(f"Poisson mean must be >= 0, got {lam}")
        if lam == 0.0:
            return 0
        if lam > 30.0:
            half = lam / 2.0
            return self.poisson(half) + self.poisson(lam - half)
        u = self.uniform()
        k = 0
        term = math.exp(-lam)
        cum = term
        while u >= cum and k < 400:
            k += 1
            term *= lam / k
            cum += term
        return k

    def positive_composition(self, total: int, parts: int) -> list[int]:
        """Uniform ordered composition of `total` into `parts` positive
        integers, drawn part by part from the exact marginal
        P(first = x) = C(total-x-1, parts-2) / C(total-1, parts-1)."""
        if parts < 1 or total < parts:
            raise ValidationError(
                f"cannot split {total} into {parts} positive parts"
            )
        out = []
        n, m = total, parts
        while m > 1:
            u = self.uniform()
            # walk the pmf with the ratio P(x+1)/P(x) = (n-x-m+1)/(n-x-1)
            x = 1
            pr = (m - 1) / (n - 1)  # P(first = 1), ratio form of the binomials
            cum = pr
            while u >= cum and x < n - m + 1:
                pr *= (n - x - m + 1) / (n - x - 1)
                x += 1
                cum += pr
            out.append(x)
            n -= x
            m -= 1
        out.append(n)
        return out

    def uniform_subset(self, n: int, need: int) -> list[int]:
        """Uniform subset of {0, ..., n-1} of the given size, by sequential
        inclusion with probability need/remaining. Returned sorted."""
        if not 0 <= need <= n:
            raise ValidationError(f"cannot pick {need} of {n}")
        out = []
        left = need
        for i in range(n):
            if left == 0:
                break
            if self.uniform() < left / (n - i):
                out.append(i)
                left -= 1
        return out
