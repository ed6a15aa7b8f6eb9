"""The geometric offspring family and everything derived from it.

The family has two parameters: eta in (0, 1] is the chance of having any
children at all, and given at least one child the count is geometric with
success parameter q in (0, 1):

    p(0) = 1 - eta,    p(k) = eta * q * (1 - q)^(k-1)   for k >= 1.

Its generating function is a Mobius transform, which is the engine behind
the whole package: composing Mobius transforms stays in the family, so the
n-th generation size of the branching process is again a two-parameter
geometric law, and every conditioning ratio comes out in closed form.

Two derived poles describe a law more conveniently than (eta, q):

    gamma = 1 / (1 - q)            the radius of convergence of the gf,
    kappa = (1 - eta) / (1 - q)    its fixed point other than 1.

The mean is mu = eta / q; mu < 1 forces gamma > kappa > 1, mu > 1 forces
gamma > 1 > kappa >= 0, and at criticality kappa = 1.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import ValidationError
from .logspace import LOG_ZERO, log_binomial


@dataclass(frozen=True)
class OffspringParams:
    """Validated (eta, q) pair with the derived quantities as properties."""

    eta: float
    q: float

    def __post_init__(self):
        if not (isinstance(self.eta, (int, float)) and isinstance(self.q, (int, float))):
            raise ValidationError("eta and q must be numbers")
        object.__setattr__(self, "eta", float(self.eta))
        object.__setattr__(self, "q", float(self.q))
        if not 0.0 < self.eta <= 1.0:
            raise ValidationError(f"eta must be in (0, 1], got {self.eta!r}")
        if not 0.0 < self.q < 1.0:
            raise ValidationError(f"q must be in (0, 1), got {self.q!r}")

    @property
    def mean(self) -> float:
        return self.eta / self.q

    @property
    def gamma(self) -> float:
        return 1.0 / (1.0 - self.q)

    @property
    def kappa(self) -> float:
        return (1.0 - self.eta) / (1.0 - self.q)

    def regime(self) -> str:
        """'subcritical' | 'critical' | 'supercritical'.

        Criticality is mu == 1, i.e. exactly eta == q; float equality is
        the intended contract (callers wanting the critical branch must
        pass literally equal parameters).
        """
        if self.eta == self.q:
            return "critical"
        return "subcritical" if self.eta < self.q else "supercritical"

    @classmethod
    def from_poles(cls, kappa: float, gamma: float) -> "OffspringParams":
        """Rebuild (eta, q) from the pole pair: eta = 1 - kappa/gamma,
        q = 1 - 1/gamma."""
        if not gamma > 1.0:
            raise ValidationError(f"gamma must exceed 1, got {gamma!r}")
        if not 0.0 <= kappa < gamma:
            raise ValidationError(f"kappa must lie in [0, gamma), got {kappa!r}")
        return cls(eta=1.0 - kappa / gamma, q=1.0 - 1.0 / gamma)

    def log_pmf(self, k: int) -> float:
        """log p(k)."""
        if k < 0:
            return LOG_ZERO
        if k == 0:
            return math.log1p(-self.eta) if self.eta < 1.0 else LOG_ZERO
        return (
            math.log(self.eta)
            + math.log(self.q)
            + (k - 1) * math.log1p(-self.q)
        )

    def gf(self, s: float) -> float:
        """Generating function E[s^K] = ((1-eta) - s(1-q-eta)) / (1 - s(1-q)),
        valid for 0 <= s < gamma."""
        if not 0.0 <= s < self.gamma:
            raise ValidationError(f"gf argument must be in [0, gamma), got {s!r}")
        return ((1.0 - self.eta) - s * (1.0 - self.q - self.eta)) / (1.0 - s * (1.0 - self.q))

    def gf_inverse(self, y: float) -> float:
        """Functional inverse of gf, used only as a test oracle for the
        closed-form pole recursion (the iteration loses precision near the
        fixed point, the closed form does not)."""
        den = y * (1.0 - self.q) - (1.0 - self.q - self.eta)
        return (y - (1.0 - self.eta)) / den

    def to_json(self) -> str:
        return json.dumps({"eta": self.eta, "q": self.q})

    @classmethod
    def from_json(cls, text: str) -> "OffspringParams":
        """Parse {"eta": ..., "q": ...}; any derived fields present in the
        payload are ignored and recomputed."""
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"bad offspring JSON: {exc}") from exc
        if not isinstance(obj, dict) or "eta" not in obj or "q" not in obj:
            raise ValidationError("offspring JSON must carry 'eta' and 'q'")
        return cls(eta=obj["eta"], q=obj["q"])


@dataclass(frozen=True)
class IteratedLaw:
    """Law of the n-th generation size started from one ancestor.

    Again a two-parameter geometric law, pinned by its own pole gamma_n.
    The differences gamma_n - 1 and gamma_n - kappa are stored from their
    cancellation-free closed forms: for subcritical parameters gamma_n
    approaches kappa at rate mu^n, and computing the difference by
    subtraction would throw away every significant digit that the deep
    conditioning ratios rely on.

    n = 0 is the degenerate point mass at 1, represented by the customary
    convention gamma_0 = +inf.
    """

    base: OffspringParams
    n: int
    gamma_n: float
    gamma_minus_one: float
    gamma_minus_kappa: float
    log_gamma: float
    mean: float

    @property
    def eta_n(self) -> float:
        return 1.0 - self.base.kappa / self.gamma_n if self.n > 0 else 1.0

    @property
    def q_n(self) -> float:
        return 1.0 - 1.0 / self.gamma_n if self.n > 0 else 1.0

    @property
    def law(self) -> OffspringParams:
        """The generation-size law as an OffspringParams (n >= 1 only)."""
        if self.n < 1:
            raise ValidationError("generation 0 is the point mass at 1, not a geometric law")
        return OffspringParams(eta=self.eta_n, q=self.q_n)


def iterate(p: OffspringParams, n: int) -> IteratedLaw:
    """Pole of the n-fold composed generating function, in closed form.

    mu != 1:  gamma_n = (kappa - mu^n) / (1 - mu^n), evaluated through
              mu^{-n} on the supercritical side so nothing overflows;
    mu == 1:  gamma_n = 1 + (gamma - 1) / n.

    The sequence decreases strictly from gamma_1 = gamma to max(1, kappa).
    """
    if n < 0:
        raise ValidationError(f"generation index must be >= 0, got {n}")
    if n == 0:
        return IteratedLaw(
            base=p, n=0, gamma_n=math.inf, gamma_minus_one=math.inf,
            gamma_minus_kappa=math.inf, log_gamma=math.inf, mean=1.0,
        )
    mu = p.mean
    kappa = p.kappa
    if n == 1:
        # gamma_1 is the base pole itself; route around the closed form so
        # the first iterate is exact rather than correct to the last bit
        return IteratedLaw(
            base=p, n=1, gamma_n=p.gamma,
            gamma_minus_one=p.q / (1.0 - p.q),
            gamma_minus_kappa=p.eta / (1.0 - p.q),
            log_gamma=-math.log1p(-p.q), mean=mu,
        )
    if p.eta == p.q:
        gm1 = (p.gamma - 1.0) / n
        gmk = gm1  # kappa == 1
        mean_n = 1.0
    elif mu < 1.0:
        mun = mu ** n
        gm1 = (kappa - 1.0) / (1.0 - mun)
        gmk = mun * (kappa - 1.0) / (1.0 - mun)
        mean_n = mun
    else:
        mun_inv = mu ** (-n)
        gm1 = (1.0 - kappa) * mun_inv / (1.0 - mun_inv)
        gmk = (1.0 - kappa) / (1.0 - mun_inv)
        mean_n = mu ** n if n * math.log(mu) < 700 else math.inf
    return IteratedLaw(
        base=p, n=n, gamma_n=1.0 + gm1, gamma_minus_one=gm1,
        gamma_minus_kappa=gmk, log_gamma=math.log1p(gm1), mean=mean_n,
    )


@dataclass(frozen=True)
class ExtinctionParams:
    """The tree conditioned on dying out, and the bookkeeping constants.

    law:             offspring law of the conditioned tree; equal to the
                     original below criticality, and to the (q, eta) swap
                     above it.
    mean:            its mean, min(mu, 1/mu).
    extinction_prob: extinction probability of the original tree,
                     min(1, kappa). Zero exactly when eta = 1.
    """

    law: OffspringParams
    mean: float
    extinction_prob: float


def extinction_params(p: OffspringParams) -> ExtinctionParams:
    if p.mean <= 1.0:
        return ExtinctionParams(law=p, mean=p.mean, extinction_prob=1.0)
    return ExtinctionParams(
        law=OffspringParams(eta=p.q, q=p.eta),
        mean=p.q / p.eta,
        extinction_prob=p.kappa,
    )


def log_size_biased(p: OffspringParams, k: int, n: int) -> float:
    """log of the k-th order size-biased pmf at n.

    The bias applies to the extinction-conditioned offspring law, whose
    geometric parameter is qh = max(q, eta), so it collapses to
    C(n, k) qh^(k+1) (1-qh)^(n-k) on n >= k. (Equivalently
    n!/(n-k)! p(n) normalized by the k-th factorial moment; the closed
    form is what the samplers invert.) Below criticality qh = q and the
    bias is of p itself.
    """
    if k < 1:
        raise ValidationError(f"size-bias order must be >= 1, got {k}")
    if n < k:
        return LOG_ZERO
    qh = max(p.q, p.eta)
    return (
        log_binomial(n, k)
        + (k + 1) * math.log(qh)
        + (n - k) * math.log1p(-qh)
    )


def immigration_rate(p: OffspringParams, h: int) -> float:
    """Per-level immigration intensity of the skinny-limit skeleton.

    The number of new spine lines appearing between levels h and h + 1 is
    Poisson with mean theta times this value:

        mu < 1:  mu^(-h-1) (1 - mu)(kappa - 1) / kappa
        mu = 1:  gamma - 1
        mu > 1:  mu^h (mu - 1)(1 - kappa)
    """
    if h < 0:
        raise ValidationError(f"level must be >= 0, got {h}")
    mu = p.mean
    kappa = p.kappa
    if p.eta == p.q:
        return p.gamma - 1.0
    if mu < 1.0:
        return mu ** (-h - 1) * (1.0 - mu) * (kappa - 1.0) / kappa
    return mu ** h * (mu - 1.0) * (1.0 - kappa)


def survivor_offspring_param(p: OffspringParams, n: int) -> float:
    """Success parameter of the geometric-on-{1,2,...} law of the number
    of surviving children of a depth-n survivor in the two-type fat tree.

        mu <= 1:  mu (1 - mu^n) / (1 - mu^(n+1)), critical limit n / (n+1)
        mu > 1:   (1 - mu^n) / (1 - mu^(n+1))

    One closed form behind both: (1 - gamma_{n+1} (1-q)) / qhat, where
    qhat = max(eta, q) is the success parameter of the mirrored law; the
    numerator is q mu (1 - mu^n) / (1 - mu^(n+1)) in every regime, and
    qhat swallows the extra mu exactly when the law is supercritical.
    Evaluated through mu^{-n} on that side so nothing overflows. The value
    at n = 0 is 0 (the root's survivor count is handled separately and
    never draws from this law).
    """
    if n < 0:
        raise ValidationError(f"level must be >= 0, got {n}")
    if n == 0:
        return 0.0
    mu = p.mean
    if p.eta == p.q:
        return n / (n + 1.0)
    if mu < 1.0:
        return mu * (1.0 - mu ** n) / (1.0 - mu ** (n + 1))
    mun1 = mu ** (-n - 1)
    return (mun1 - 1.0 / mu) / (mun1 - 1.0)


def cumulative_immigration(p: OffspringParams, h: int) -> float:
    """Sum of immigration_rate over levels 0 .. h-1, in closed form.

        mu < 1:  (mu^-h - 1)(kappa - 1) / kappa
        mu = 1:  h (gamma - 1)
        mu > 1:  (mu^h - 1)(1 - kappa)
    """
    if h < 0:
        raise ValidationError(f"level must be >= 0, got {h}")
    mu = p.mean
    kappa = p.kappa
    if p.eta == p.q:
        return h * (p.gamma - 1.0)
    if mu < 1.0:
        return (mu ** (-h) - 1.0) * (kappa - 1.0) / kappa
    return (mu**h - 1.0) * (1.0 - kappa)


def log_gamma_ratio(p: OffspringParams, n: int, m: int) -> float:
    """log(gamma_n / gamma_m) for n, m >= 1, without cancellation.

    Subtracting two log-poles loses all precision once both sit within a
    few ulp of the common limit; written through log1p of the exact
    closed-form pieces the result keeps full relative accuracy even when
    it is later multiplied by generation sizes of order mu^-n.
    """
    if n < 1 or m < 1:
        raise ValidationError("pole indices must be >= 1")
    if n == m:
        return 0.0
    mu = p.mean
    kappa = p.kappa
    if p.eta == p.q:
        g1 = p.gamma - 1.0
        # gamma_i = (i + g1) / i; one log1p of the exact cross difference
        return math.log1p(g1 * (m - n) / ((m + g1) * n))
    if mu < 1.0:
        return (
            math.log1p(-(mu**n) / kappa)
            - math.log1p(-(mu**m) / kappa)
            + math.log1p(-(mu**m))
            - math.log1p(-(mu**n))
        )
    xn = mu ** (-n)
    xm = mu ** (-m)
    return (
        math.log1p(-kappa * xn)
        - math.log1p(-xn)
        - math.log1p(-kappa * xm)
        + math.log1p(-xm)
    )


def gamma_gap(p: OffspringParams, m: int, n: int) -> float:
    """gamma_m - gamma_n for 1 <= m <= n (non-negative, cancellation-free)."""
    if not 1 <= m <= n:
        raise ValidationError("need 1 <= m <= n")
    if m == n:
        return 0.0
    mu = p.mean
    kappa = p.kappa
    if p.eta == p.q:
        return (p.gamma - 1.0) * (n - m) / (n * m)
    if mu < 1.0:
        return (kappa - 1.0) * (mu**m - mu**n) / ((1.0 - mu**m) * (1.0 - mu**n))
    xm = mu ** (-m)
    xn = mu ** (-n)
    return (1.0 - kappa) * (xm - xn) / ((1.0 - xm) * (1.0 - xn))


def log_condensation_offspring(p: OffspringParams, n: int, k: int) -> float:
    """log of the depth-n offspring pmf of the fat limit tree:
    gamma_{n+1}^k p(k) / gamma_n. Normalization is exactly the pole
    recursion gf(gamma_{n+1}) = gamma_n."""
    if n < 1:
        raise ValidationError(f"depth must be >= 1, got {n}")
    if k < 0:
        return LOG_ZERO
    lg_next = iterate(p, n + 1).log_gamma
    lg_here = iterate(p, n).log_gamma
    return k * lg_next + p.log_pmf(k) - lg_here


def condensation_offspring_params(p: OffspringParams, n: int) -> OffspringParams:
    """The depth-n offspring law of the fat limit tree as an
    OffspringParams (it stays inside the geometric family:
    q_n = 1 - gamma_{n+1} (1 - q), eta_n = 1 - (1 - eta)/gamma_n)."""
    if n < 1:
        raise ValidationError(f"depth must be >= 1, got {n}")
    g_next = iterate(p, n + 1).gamma_n
    g_here = iterate(p, n).gamma_n
    return OffspringParams(
        eta=1.0 - (1.0 - p.eta) / g_here,
        q=1.0 - g_next * (1.0 - p.q),
    )
