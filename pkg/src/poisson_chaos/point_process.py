"""Control measures and Poisson point patterns on bounded windows.

The state space is Z = R x R with coordinates z = (u, x): u is the jump size,
x the time coordinate.  A control measure mu is either homogeneous,
mu(du, dx) = nu(du) dx with nu a jump marginal, or one of two non-homogeneous
families whose u-density depends on x.  Patterns are sampled conditionally:
a Poisson count for the window followed by i.i.d. locations from the
normalized restriction of mu, which is dimension-agnostic and embarrassingly
parallel across replications.

Infinite-activity marginals are handled by a hard truncation of jumps below
``eps``; no small-jump Gaussian correction is applied, and the neglected
second-moment mass is reported so callers can bound the bias.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate as _sint
from scipy.special import exp1, gammaincc, gamma as gamma_fn

__all__ = [
    "InfiniteMassError",
    "SupportError",
    "Window",
    "PointPattern",
    "DiscreteControl",
    "GeneralizedGammaControl",
    "ExtendedGammaControl",
    "BetaControl",
    "measure_of",
    "sample_pattern",
    "compensated_count",
    "replication_seed",
    "pattern_to_csv",
    "pattern_from_csv",
]


class InfiniteMassError(ValueError):
    """Raised when an operation would require the mass of an infinite-activity
    marginal without truncation."""


class SupportError(ValueError):
    """Raised when a kernel or region leaks outside the sampled window."""


@dataclass(frozen=True)
class Window:
    """Rectangle [x_lo, x_hi] x [u_lo, u_hi] in Z; u bounds of None mean the
    full support of the jump marginal."""

    x_lo: float
    x_hi: float
    u_lo: float | None = None
    u_hi: float | None = None

    def __post_init__(self):
        if not self.x_hi > self.x_lo:
            raise ValueError(f"degenerate window: x in [{self.x_lo}, {self.x_hi}]")
        if self.u_lo is not None and self.u_hi is not None and not self.u_hi > self.u_lo:
            raise ValueError("degenerate window: empty jump range")

    @property
    def length(self) -> float:
        return self.x_hi - self.x_lo

    def contains_x(self, x) -> np.ndarray:
        x = np.asarray(x)
        return (x >= self.x_lo) & (x <= self.x_hi)

    def contains(self, u, x) -> np.ndarray:
        ok = self.contains_x(x)
        if self.u_lo is not None:
            ok = ok & (np.asarray(u) >= self.u_lo)
        if self.u_hi is not None:
            ok = ok & (np.asarray(u) <= self.u_hi)
        return ok


@dataclass(frozen=True)
class PointPattern:
    """Atoms of one Poisson realization on a window.

    ``u`` and ``x`` are parallel arrays (jump sizes / time coordinates);
    ``total_mass`` is mu(window), retained so downstream evaluations never
    recompute it; ``seed`` is the 64-bit sampling seed for provenance.
    """

    u: np.ndarray
    x: np.ndarray
    window: Window
    total_mass: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if self.u.shape != self.x.shape:
            raise ValueError("u and x must be parallel arrays")
        if self.u.size and not bool(np.all(self.window.contains(self.u, self.x))):
            raise ValueError("atom outside window")

    def __len__(self) -> int:
        return int(self.u.size)

    def count_in(self, region: Window) -> int:
        return int(np.count_nonzero(region.contains(self.u, self.x)))


def replication_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Counter-based replication seed: depends only on (master_seed, index),
    never on scheduling order or worker count."""
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))


# ---------------------------------------------------------------------------
# control measures
# ---------------------------------------------------------------------------


class ControlMeasure:
    """Common surface of all control measures.

    Subclasses provide per-window masses, jump-moment integrals and exact or
    rejection samplers.  All instances are immutable and safe to share across
    workers.
    """

    homogeneous: bool = True

    # -- masses ------------------------------------------------------------
    def jump_mass(self, u_lo=None, u_hi=None) -> float:
        raise NotImplementedError

    def mass(self, window: Window) -> float:
        raise NotImplementedError

    # -- moments -----------------------------------------------------------
    def moment(self, i: int, u_lo=None, u_hi=None) -> float:
        """K_nu^(i) = int u^i nu(du) over the (truncated) support."""
        raise NotImplementedError

    def abs_moment(self, i: int) -> float:
        """int |u|^i nu(du); equals moment(i) for positive marginals."""
        return self.moment(i)

    def neglected_second_moment(self) -> float:
        """Second-moment mass int_0^eps u^2 nu(du) dropped by truncation."""
        return 0.0

    # -- sampling ----------------------------------------------------------
    def sample(self, window: Window, rng: np.random.Generator):
        raise NotImplementedError

    # -- generic integration against mu ------------------------------------
    def integrate(self, fn, window: Window) -> float:
        """int_window fn(u, x) mu(du, dx) by exact sums or quadrature."""
        raise NotImplementedError


@dataclass(frozen=True)
class DiscreteControl(ControlMeasure):
    """Finite discrete jump marginal nu = sum_i w_i delta_{u_i} times
    Lebesgue measure on the time axis."""

    values: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.weights) or not self.values:
            raise ValueError("values and weights must be non-empty and parallel")
        if any(w <= 0 for w in self.weights):
            raise ValueError("discrete jump weights must be positive")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    def _sel(self, u_lo, u_hi):
        vals = np.array(self.values)
        w = np.array(self.weights)
        keep = np.ones(vals.size, dtype=bool)
        if u_lo is not None:
            keep &= vals >= u_lo
        if u_hi is not None:
            keep &= vals <= u_hi
        return vals[keep], w[keep]

    def jump_mass(self, u_lo=None, u_hi=None) -> float:
        _, w = self._sel(u_lo, u_hi)
        return float(w.sum())

    def mass(self, window: Window) -> float:
        return self.jump_mass(window.u_lo, window.u_hi) * window.length

    def moment(self, i: int, u_lo=None, u_hi=None) -> float:
        v, w = self._sel(u_lo, u_hi)
        return float(np.sum(w * v ** i))

    def abs_moment(self, i: int) -> float:
        v = np.array(self.values)
        w = np.array(self.weights)
        return float(np.sum(w * np.abs(v) ** i))

    def sample(self, window: Window, rng: np.random.Generator):
        vals, w = self._sel(window.u_lo, window.u_hi)
        total = w.sum() * window.length
        n = rng.poisson(total)
        x = rng.uniform(window.x_lo, window.x_hi, size=n)
        u = rng.choice(vals, size=n, p=w / w.sum()) if n else np.empty(0)
        return u, x, float(total)

    def integrate(self, fn, window: Window) -> float:
        vals, w = self._sel(window.u_lo, window.u_hi)
        total = 0.0
        for v, wt in zip(vals, w):
            val, _ = _sint.quad(lambda x, v=v: fn(np.asarray([v]), np.asarray([x]))[0],
                                window.x_lo, window.x_hi, epsabs=1e-12, epsrel=1e-10, limit=400)
            total += wt * val
        return total


def _upper_gamma(a: float, z: float) -> float:
    # Gamma(a, z) for a > -1, a != 0, including the negative range needed by
    # truncated generalized-Gamma masses: Gamma(a, z) = (Gamma(a+1, z) - z^a e^-z)/a
    if a > 0:
        return float(gamma_fn(a) * gammaincc(a, z))
    return float((_upper_gamma(a + 1.0, z) - z ** a * np.exp(-z)) / a)


@dataclass(frozen=True)
class GeneralizedGammaControl(ControlMeasure):
    """Homogeneous control with density Gamma(1-sigma)^{-1} e^{-gamma u} u^{-1-sigma}
    on u > 0, truncated at eps; sigma in (0,1), gamma > 0.

    Infinite activity at the origin: eps = 0 has infinite mass and every mass
    request raises.  Truncated sampling uses an inverse-CDF table; moments use
    upper incomplete Gamma closed forms.
    """

    sigma: float
    gamma: float
    eps: float = 0.0
    _table_size: int = 4096

    def __post_init__(self):
        if not (0.0 < self.sigma < 1.0):
            raise ValueError("sigma must lie in (0, 1)")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")

    def _require_eps(self):
        if self.eps <= 0.0:
            raise InfiniteMassError(
                "generalized-Gamma marginal has infinite mass without truncation (eps = 0)")

    def _norm(self) -> float:
        return 1.0 / float(gamma_fn(1.0 - self.sigma))

    def moment(self, i: int, u_lo=None, u_hi=None) -> float:
        lo = self.eps if u_lo is None else max(u_lo, self.eps)
        if i == 0:
            if lo <= 0.0:
                raise InfiniteMassError("zeroth moment diverges without truncation")
        part = _upper_gamma(i - self.sigma, self.gamma * lo)
        if u_hi is not None:
            part -= _upper_gamma(i - self.sigma, self.gamma * u_hi)
        return self._norm() * self.gamma ** (self.sigma - i) * part

    def jump_mass(self, u_lo=None, u_hi=None) -> float:
        self._require_eps()
        return self.moment(0, u_lo, u_hi)

    def mass(self, window: Window) -> float:
        return self.jump_mass(window.u_lo, window.u_hi) * window.length

    def neglected_second_moment(self) -> float:
        # int_0^eps u^2 nu(du), finite for all sigma in (0,1)
        full = self._norm() * self.gamma ** (self.sigma - 2) * _upper_gamma(2 - self.sigma, 0.0)
        return full - self.moment(2)

    def _u_grid(self, u_lo, u_hi):
        lo = self.eps if u_lo is None else max(u_lo, self.eps)
        self._require_eps()
        hi = u_hi if u_hi is not None else lo + 60.0 / self.gamma
        return np.geomspace(lo, hi, self._table_size)

    def sample(self, window: Window, rng: np.random.Generator):
        grid = self._u_grid(window.u_lo, window.u_hi)
        dens = np.exp(-self.gamma * grid) * grid ** (-1.0 - self.sigma)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
        cdf /= cdf[-1]
        total = self.jump_mass(window.u_lo, window.u_hi) * window.length
        n = rng.poisson(total)
        x = rng.uniform(window.x_lo, window.x_hi, size=n)
        u = np.interp(rng.uniform(size=n), cdf, grid)
        return u, x, float(total)

    def integrate(self, fn, window: Window) -> float:
        self._require_eps()
        lo = self.eps if window.u_lo is None else max(window.u_lo, self.eps)
        hi = window.u_hi if window.u_hi is not None else lo + 60.0 / self.gamma

        def inner(u):
            val, _ = _sint.quad(lambda x: fn(np.asarray([u]), np.asarray([x]))[0],
                                window.x_lo, window.x_hi, epsabs=1e-12, epsrel=1e-9, limit=200)
            return val * self._norm() * np.exp(-self.gamma * u) * u ** (-1.0 - self.sigma)

        val, _ = _sint.quad(inner, lo, hi, epsabs=1e-12, epsrel=1e-9, limit=400)
        return val


@dataclass(frozen=True)
class ExtendedGammaControl(ControlMeasure):
    """Non-homogeneous control with density e^{-beta(x) u} / u on u > 0, x > 0,
    where beta(x) = beta0 + beta1 * sqrt(x) (strictly positive, nondecreasing).

    The u-marginal is infinite-activity (u^{-1} at the origin); jumps below
    eps are dropped.  Sampling rejects from the dominating homogeneous product
    built from beta_min = beta(x_lo).
    """

    beta0: float = 1.0
    beta1: float = 1.0
    eps: float = 1e-4
    _table_size: int = 4096

    homogeneous = False

    def __post_init__(self):
        if self.beta0 <= 0 or self.beta1 < 0:
            raise ValueError("need beta0 > 0 and beta1 >= 0")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")

    def beta(self, x):
        return self.beta0 + self.beta1 * np.sqrt(np.maximum(np.asarray(x, dtype=float), 0.0))

    def _require_eps(self):
        if self.eps <= 0.0:
            raise InfiniteMassError(
                "extended-Gamma marginal has infinite mass without truncation (eps = 0)")

    def x_mass(self, x, u_lo=None, u_hi=None):
        """Per-time u-mass int e^{-beta(x)u}/u du over the truncated range."""
        self._require_eps()
        lo = self.eps if u_lo is None else max(u_lo, self.eps)
        b = self.beta(x)
        out = exp1(b * lo)
        if u_hi is not None:
            out = out - exp1(b * u_hi)
        return out

    def x_moment(self, i: int, x):
        """int u^i e^{-beta(x)u}/u du over [eps, inf) for i >= 1."""
        if i < 1:
            raise ValueError("use x_mass for the zeroth moment")
        b = self.beta(x)
        return gamma_fn(i) * gammaincc(i, b * self.eps) / b ** i

    def moment(self, i: int, u_lo=None, u_hi=None) -> float:
        raise ValueError("non-homogeneous control has no global jump moments; use x_moment")

    def neglected_mean_mass(self) -> float:
        # int_0^eps e^{-beta0 u} du <= eps; reported bound on the dropped mean mass per unit time
        return float(self.eps)

    def mass(self, window: Window) -> float:
        self._require_eps()
        if window.x_lo < 0:
            raise ValueError("extended-Gamma control is supported on x > 0")
        val, _ = _sint.quad(lambda x: self.x_mass(x, window.u_lo, window.u_hi),
                            window.x_lo, window.x_hi, epsabs=1e-11, epsrel=1e-9, limit=400)
        return float(val)

    def sample(self, window: Window, rng: np.random.Generator):
        self._require_eps()
        lo = self.eps if window.u_lo is None else max(window.u_lo, self.eps)
        hi = window.u_hi if window.u_hi is not None else lo + 80.0 / self.beta0
        b_min = float(self.beta(window.x_lo))
        grid = np.geomspace(lo, hi, self._table_size)
        dens = np.exp(-b_min * grid) / grid
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
        dom_jump_mass = cdf[-1]
        cdf /= cdf[-1]
        n = rng.poisson(dom_jump_mass * window.length)
        x = rng.uniform(window.x_lo, window.x_hi, size=n)
        u = np.interp(rng.uniform(size=n), cdf, grid)
        keep = rng.uniform(size=n) < np.exp(-(self.beta(x) - b_min) * u)
        return u[keep], x[keep], self.mass(window)

    def integrate(self, fn, window: Window) -> float:
        self._require_eps()
        lo = self.eps if window.u_lo is None else max(window.u_lo, self.eps)
        hi = window.u_hi if window.u_hi is not None else lo + 80.0 / self.beta0

        def inner(x):
            val, _ = _sint.quad(lambda u: fn(np.asarray([u]), np.asarray([x]))[0]
                                * np.exp(-self.beta(x) * u) / u,
                                lo, hi, epsabs=1e-12, epsrel=1e-9, limit=200)
            return val

        val, _ = _sint.quad(inner, window.x_lo, window.x_hi,
                            epsabs=1e-11, epsrel=1e-8, limit=400)
        return float(val)


@dataclass(frozen=True)
class BetaControl(ControlMeasure):
    """Non-homogeneous control with density c(x) (1-u)^{c(x)-1} on u in (0,1),
    x > 0, where c(x) = max(c1 * sqrt(x), c0).

    The floor c0 keeps the density proper near x = 0; only the large-x
    behaviour c(x) ~ sqrt(x) matters for the limit constants.  Finite
    activity: unit u-mass at every x, so no truncation is needed.
    """

    c0: float = 1.0
    c1: float = 1.0

    homogeneous = False

    def __post_init__(self):
        if self.c0 <= 0 or self.c1 <= 0:
            raise ValueError("need c0, c1 > 0")

    def c(self, x):
        return np.maximum(self.c1 * np.sqrt(np.maximum(np.asarray(x, dtype=float), 0.0)), self.c0)

    def x_mass(self, x, u_lo=None, u_hi=None):
        c = self.c(x)
        lo = 0.0 if u_lo is None else max(u_lo, 0.0)
        hi = 1.0 if u_hi is None else min(u_hi, 1.0)
        return (1.0 - lo) ** c - (1.0 - hi) ** c

    def x_moment(self, i: int, x):
        # int u^i c (1-u)^{c-1} du = i! / ((c+1)...(c+i))
        c = self.c(x)
        out = np.ones_like(np.asarray(c, dtype=float))
        for k in range(1, i + 1):
            out = out * k / (c + k)
        return out

    def moment(self, i: int, u_lo=None, u_hi=None) -> float:
        raise ValueError("non-homogeneous control has no global jump moments; use x_moment")

    def mass(self, window: Window) -> float:
        if window.x_lo < 0:
            raise ValueError("Beta control is supported on x > 0")
        if window.u_lo is None and window.u_hi is None:
            return window.length
        val, _ = _sint.quad(lambda x: self.x_mass(x, window.u_lo, window.u_hi),
                            window.x_lo, window.x_hi, epsabs=1e-12, epsrel=1e-10, limit=400)
        return float(val)

    def sample(self, window: Window, rng: np.random.Generator):
        # exact conditional inversion: u | x ~ 1 - (1-V)^{1/c(x)}
        if window.u_lo is not None or window.u_hi is not None:
            raise NotImplementedError("Beta control sampling uses the full jump range")
        total = window.length
        n = rng.poisson(total)
        x = rng.uniform(window.x_lo, window.x_hi, size=n)
        u = 1.0 - (1.0 - rng.uniform(size=n)) ** (1.0 / self.c(x))
        return u, x, float(total)

    def integrate(self, fn, window: Window) -> float:
        def inner(x):
            c = float(self.c(x))
            val, _ = _sint.quad(lambda u: fn(np.asarray([u]), np.asarray([x]))[0]
                                * c * (1.0 - u) ** (c - 1.0),
                                0.0, 1.0, epsabs=1e-12, epsrel=1e-9, limit=200)
            return val

        val, _ = _sint.quad(inner, window.x_lo, window.x_hi,
                            epsabs=1e-11, epsrel=1e-8, limit=400)
        return float(val)


# ---------------------------------------------------------------------------
# module operations
# ---------------------------------------------------------------------------


def measure_of(control: ControlMeasure, region: Window) -> float:
    """mu(region), by closed form when available, else quadrature (rel err <= 1e-8)."""
    return control.mass(region)


def sample_pattern(control: ControlMeasure, window: Window, seed) -> PointPattern:
    """Sample one Poisson realization: count ~ Poisson(mu(window)), locations
    i.i.d. mu restricted to the window; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    u, x, total = control.sample(window, rng)
    seed_int = seed if isinstance(seed, int) else -1
    return PointPattern(u=u, x=x, window=window, total_mass=total, seed=seed_int)


def compensated_count(pattern: PointPattern, region: Window, control: ControlMeasure) -> float:
    """Count of atoms in the region minus mu(region)."""
    if region.x_lo < pattern.window.x_lo - 1e-12 or region.x_hi > pattern.window.x_hi + 1e-12:
        raise SupportError("region extends outside the sampled window")
    return pattern.count_in(region) - control.mass(region)


# ---------------------------------------------------------------------------
# pattern CSV export / import
# ---------------------------------------------------------------------------


def pattern_to_csv(pattern: PointPattern, path) -> None:
    header = (f"# window x=[{pattern.window.x_lo!r},{pattern.window.x_hi!r}]"
              f" mass={pattern.total_mass!r} seed={pattern.seed}\nu,x\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header)
        for u, x in zip(pattern.u, pattern.x):
            fh.write(f"{float(u)!r},{float(x)!r}\n")


def pattern_from_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    if data.size == 0:
        return np.empty(0), np.empty(0)
    return data[:, 0], data[:, 1]
