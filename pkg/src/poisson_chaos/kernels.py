"""Symmetric kernels on Z and Z^2: grid representations and analytic families.

Evaluation conventions: arity-1 kernels are called as k(u, x), arity-2 as
k(u1, x1, u2, x2); all entry points are numpy-vectorized and return 0 outside
the declared support.  ``lp_norm(p)`` returns int |f|^p dmu^arity (not the
p-th root).  Closed forms are written with exponents combined before
exponentiation so they stay finite for horizons in the thousands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .point_process import ControlMeasure, Window
from .quadrature import exp_refined_edges, integrate_checked


class ArityError(ValueError):
    pass


class Kernel:
    arity: int = 0

    def __call__(self, *coords):
        raise NotImplementedError

    def symmetrize(self) -> "Kernel":
        raise NotImplementedError

    def l2_norm_sq(self, control: ControlMeasure, window: Window) -> float:
        return self.lp_norm(2, control, window)

    def lp_norm(self, p: int, control: ControlMeasure, window: Window) -> float:
        raise NotImplementedError

    # compensator integrals used by pathwise evaluation ---------------------
    def integral(self, control: ControlMeasure, window: Window) -> float:
        """int f dmu over the window (arity 1)."""
        raise NotImplementedError

    def partial_integral(self, control, window, u, x):
        """int f((u, x), z) mu(dz) over the window, vectorized over atoms (arity 2)."""
        raise NotImplementedError

    def double_integral(self, control: ControlMeasure, window: Window) -> float:
        """int int f dmu^2 over window^2 (arity 2)."""
        raise NotImplementedError

    def support_excess(self, window: Window) -> float:
        """Upper bound on the L2 mass of the kernel outside the window; 0 for
        kernels fully contained."""
        return 0.0

    def scaled(self, c: float) -> "Kernel":
        return ScaledKernel(self, float(c))

    def __mul__(self, c):
        return self.scaled(c)

    __rmul__ = __mul__


def _check_arity(kernel: Kernel, expected: int):
    if kernel.arity != expected:
        raise ArityError(f"expected arity-{expected} kernel, got arity-{kernel.arity}")


# ---------------------------------------------------------------------------
# grid kernels: piecewise constant in the time coordinate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridKernel(Kernel):
    """Cell-constant kernel over a partition of the time axis.

    ``edges`` are the K+1 cell boundaries; ``values`` has shape (K,) for
    arity 1 or (K, K) for arity 2.  The kernel ignores the jump coordinate,
    which keeps every integral a finite sum (exact arithmetic) once the cell
    masses m_a = mu(cell_a) are known.
    """

    edges: tuple[float, ...]
    values: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be strictly increasing")
        vals = np.asarray(self.values, dtype=float)
        k = edges.size - 1
        if vals.shape == (k,):
            object.__setattr__(self, "arity", 1)
        elif vals.shape == (k, k):
            object.__setattr__(self, "arity", 2)
        else:
            raise ValueError(f"values shape {vals.shape} does not match {k} cells")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "edges", tuple(float(e) for e in edges))
        object.__setattr__(self, "values", vals)

    def _cell(self, x):
        x = np.asarray(x, dtype=float)
        e = np.asarray(self.edges)
        idx = np.searchsorted(e, x, side="right") - 1
        # right edge of the last cell belongs to it
        idx = np.where(x == e[-1], e.size - 2, idx)
        inside = (idx >= 0) & (idx <= e.size - 2) & (x >= e[0]) & (x <= e[-1])
        return np.where(inside, idx, 0), inside

    def cell_masses(self, control: ControlMeasure, window: Window) -> np.ndarray:
        e = self.edges
        return np.array([
            control.mass(Window(e[a], e[a + 1], window.u_lo, window.u_hi))
            for a in range(len(e) - 1)
        ])

    def __call__(self, *coords):
        if self.arity == 1:
            _, x = coords
            idx, inside = self._cell(x)
            return np.where(inside, self.values[idx], 0.0)
        _, x1, _, x2 = coords
        i, ins1 = self._cell(x1)
        j, ins2 = self._cell(x2)
        return np.where(ins1 & ins2, self.values[i, j], 0.0)

    def symmetrize(self) -> "GridKernel":
        if self.arity != 2:
            raise ArityError("symmetrize needs an arity-2 kernel")
        return GridKernel(self.edges, 0.5 * (self.values + self.values.T))

    def is_symmetric(self, tol=0.0) -> bool:
        return self.arity == 2 and bool(np.all(np.abs(self.values - self.values.T) <= tol))

    def lp_norm(self, p, control, window):
        m = self.cell_masses(control, window)
        v = np.abs(self.values) ** p
        if self.arity == 1:
            return float(v @ m)
        return float(m @ v @ m)

    def integral(self, control, window):
        _check_arity(self, 1)
        return float(self.values @ self.cell_masses(control, window))

    def partial_integral(self, control, window, u, x):
        _check_arity(self, 2)
        m = self.cell_masses(control, window)
        idx, inside = self._cell(x)
        return np.where(inside, (self.values @ m)[idx], 0.0)

    def double_integral(self, control, window):
        _check_arity(self, 2)
        m = self.cell_masses(control, window)
        return float(m @ self.values @ m)

    def support_excess(self, window: Window) -> float:
        lo, hi = self.edges[0], self.edges[-1]
        nz = np.nonzero(self.values) if self.arity == 1 else np.nonzero(np.any(self.values != 0, axis=1))
        if len(nz[0]) == 0:
            return 0.0
        lo = self.edges[int(nz[0].min())]
        hi = self.edges[int(nz[0].max()) + 1]
        return 0.0 if (lo >= window.x_lo - 1e-12 and hi <= window.x_hi + 1e-12) else math.inf


def grid_to_csv(kernel: GridKernel, path) -> None:
    """row,col,value triples with a sidecar '<path>.meta' describing the partition."""
    vals = kernel.values
    with open(str(path) + ".meta", "w", encoding="utf-8") as fh:
        fh.write(f"arity = {kernel.arity}\n")
        fh.write("edges = " + ",".join(repr(e) for e in kernel.edges) + "\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("row,col,value\n")
        if kernel.arity == 1:
            for a, v in enumerate(vals):
                fh.write(f"{a},0,{float(v)!r}\n")
        else:
            for a in range(vals.shape[0]):
                for b in range(vals.shape[1]):
                    fh.write(f"{a},{b},{float(vals[a, b])!r}\n")


def grid_from_csv(path) -> GridKernel:
    meta = {}
    with open(str(path) + ".meta", encoding="utf-8") as fh:
        for line in fh:
            key, _, val = line.partition("=")
            meta[key.strip()] = val.strip()
    edges = tuple(float(t) for t in meta["edges"].split(","))
    arity = int(meta["arity"])
    k = len(edges) - 1
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if arity == 1:
        vals = np.zeros(k)
        for row, _, v in data:
            vals[int(row)] = v
    else:
        vals = np.zeros((k, k))
        for row, col, v in data:
            vals[int(row), int(col)] = v
    return GridKernel(edges, vals)


# ---------------------------------------------------------------------------
# scaling wrapper
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaledKernel(Kernel):
    base: Kernel
    factor: float

    def __post_init__(self):
        object.__setattr__(self, "arity", self.base.arity)

    def __call__(self, *coords):
        return self.factor * self.base(*coords)

    def symmetrize(self):
        return ScaledKernel(self.base.symmetrize(), self.factor)

    def lp_norm(self, p, control, window):
        return abs(self.factor) ** p * self.base.lp_norm(p, control, window)

    def integral(self, control, window):
        return self.factor * self.base.integral(control, window)

    def partial_integral(self, control, window, u, x):
        return self.factor * self.base.partial_integral(control, window, u, x)

    def double_integral(self, control, window):
        # int int (c f) dmu^2 is linear in the scale factor
        return self.factor * self.base.double_integral(control, window)

    def support_excess(self, window):
        return self.factor ** 2 * self.base.support_excess(window)

    def scaled(self, c):
        return ScaledKernel(self.base, self.factor * float(c))


# ---------------------------------------------------------------------------
# block family: disjoint unit-mass blocks on the time axis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockKernel(Kernel):
    """f_n(z, z') = (2n)^{-1/2} when z != z' fall in the same of n disjoint
    time blocks [j, j+1), j = 0..n-1, else 0.

    With unit-mass blocks this family is the canonical normalized example:
    2 ||f_n||^2 = 1 and all three contraction norms equal 1/(4n).
    """

    n: int
    arity = 2

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one block")

    @property
    def coef(self) -> float:
        return (2.0 * self.n) ** -0.5

    def block_index(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.floor(x).astype(int)
        inside = (x >= 0.0) & (x < self.n)
        return np.where(inside, idx, -1), inside

    def __call__(self, u1, x1, u2, x2):
        i, ins1 = self.block_index(x1)
        j, ins2 = self.block_index(x2)
        same = ins1 & ins2 & (i == j)
        distinct = ~(np.equal(np.asarray(x1), np.asarray(x2)) & np.equal(np.asarray(u1), np.asarray(u2)))
        return np.where(same & distinct, self.coef, 0.0)

    def symmetrize(self):
        return self

    def _block_mass(self, control, window):
        # blocks share one mass for homogeneous controls
        return control.mass(Window(0.0, 1.0, window.u_lo, window.u_hi))

    def lp_norm(self, p, control, window):
        m = self._block_mass(control, window)
        return float(self.n * self.coef ** p * m ** 2)

    def partial_integral(self, control, window, u, x):
        m = self._block_mass(control, window)
        _, inside = self.block_index(x)
        return np.where(inside, self.coef * m, 0.0)

    def double_integral(self, control, window):
        m = self._block_mass(control, window)
        return float(self.n * self.coef * m ** 2)

    def contraction_norms(self, control, window):
        # star_1^1, star_2^1 and star_1^0 squared norms; all equal c^4 n m^k
        m = self._block_mass(control, window)
        c4 = self.coef ** 4
        n11 = self.n * c4 * m ** 4
        n21 = self.n * c4 * m ** 3
        n10 = self.n * c4 * m ** 3
        return n11, n21, n10

    def star11_inner_l2(self, control, window):
        # int int f^2 (f *11 f) dmu^2, needed by the exact fourth-moment identity
        m = self._block_mass(control, window)
        return float(self.n * self.coef ** 4 * m ** 3)

    def support_excess(self, window):
        return 0.0 if (window.x_lo <= 0.0 and window.x_hi >= self.n) else math.inf

    def as_grid(self) -> GridKernel:
        vals = self.coef * np.eye(self.n)
        return GridKernel(tuple(float(j) for j in range(self.n + 1)), vals)

    def integrability_report(self, control, window):
        # quantities of the square/fourth-power integrability check
        m = self._block_mass(control, window)
        n21 = self.n * self.coef ** 4 * m ** 3
        q1 = self.n * self.coef ** 2 * m ** 1.5
        return n21, q1


# ---------------------------------------------------------------------------
# Ornstein-Uhlenbeck moving-average families
# ---------------------------------------------------------------------------


def _binom_time_integral(p: int, lam: float, T: float) -> float:
    # int_0^T (1 - e^{-lam s})^p ds
    total = T
    for k in range(1, p + 1):
        total += math.comb(p, k) * (-1.0) ** k * (1.0 - math.exp(-k * lam * T)) / (k * lam)
    return total


@dataclass(frozen=True)
class OUSingleKernel(Kernel):
    """Integrand of the time-averaged OU level: u sqrt(2 lam / T) *
    int_{max(x,0)}^T e^{-lam(t-x)} dt on x <= T."""

    lam: float
    T: float
    arity = 1

    def time_shape(self, x):
        x = np.asarray(x, dtype=float)
        lam, T = self.lam, self.T
        neg = np.exp(lam * np.minimum(x, 0.0)) * (1.0 - math.exp(-lam * T))
        pos = 1.0 - np.exp(-lam * (T - np.minimum(np.maximum(x, 0.0), T)))
        return np.where(x <= 0.0, neg, np.where(x <= T, pos, 0.0)) / lam

    def __call__(self, u, x):
        return np.asarray(u) * math.sqrt(2.0 * self.lam / self.T) * self.time_shape(x)

    def symmetrize(self):
        raise ArityError("symmetrize needs an arity-2 kernel")

    def _shape_power_integral(self, p: int, window: Window) -> float:
        lam, T = self.lam, self.T
        L = -window.x_lo
        hi = min(window.x_hi, T)
        neg = (1.0 - math.exp(-lam * T)) ** p * (1.0 - math.exp(-p * lam * L)) / (p * lam)
        pos = _binom_time_integral(p, lam, hi) if hi > 0 else 0.0
        return (neg + pos) / lam ** p

    def lp_norm(self, p, control, window):
        coef = math.sqrt(2.0 * self.lam / self.T)
        return control.abs_moment(p) * coef ** p * self._shape_power_integral(p, window)

    def integral(self, control, window):
        lam, T = self.lam, self.T
        L = -window.x_lo
        neg = (1.0 - math.exp(-lam * T)) * (1.0 - math.exp(-lam * L)) / lam
        pos = _binom_time_integral(1, lam, min(window.x_hi, T))
        return control.moment(1) * math.sqrt(2.0 * lam / T) * (neg + pos) / lam

    def support_excess(self, window):
        # L2 tail below the window cut
        lam, T = self.lam, self.T
        L = -window.x_lo
        return (2.0 / (lam * T)) * (1.0 - math.exp(-lam * T)) ** 2 * math.exp(-2 * lam * L) / (2 * lam)

    def variance_exact(self, lam_moment2: float = 1.0) -> float:
        """Exact untruncated variance of I1 of this kernel (finite-T value)."""
        lam, T = self.lam, self.T
        bracket = ((1.0 - math.exp(-lam * T)) ** 2 / (2 * lam)
                   + _binom_time_integral(2, lam, T))
        return lam_moment2 * (2.0 / (lam * T)) * bracket


def ou_ghat(lam: float, T: float, x, y, stated_form: bool = False):
    """Time integral int_{max(x,y,0)}^T 2 lam e^{-lam(2t-x-y)} dt on x, y <= T.

    ``stated_form`` reproduces the reference variant whose x v y <= 0 branch
    carries (1 - e^{-2T}) instead of (1 - e^{-2 lam T}); only the
    lambda-corrected branch satisfies the variance limits for lambda != 1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = np.maximum(np.maximum(x, y), 0.0)
    s = x + y
    inside = (x <= T) & (y <= T)
    val = np.exp(lam * (s - 2.0 * m)) - np.exp(lam * s - 2.0 * lam * T)
    if stated_form:
        neg = np.maximum(x, y) <= 0.0
        val = np.where(neg, np.exp(lam * s) * (1.0 - math.exp(-2.0 * T)), val)
    return np.where(inside, val, 0.0)


@dataclass(frozen=True)
class OUDoubleHKernel(Kernel):
    """Pair kernel of the time-averaged squared OU level:
    H(u,x; u',x') = u u' Ghat(x, x') / T on (-inf, T]^2."""

    lam: float
    T: float
    stated_form: bool = False
    arity = 2

    def __call__(self, u1, x1, u2, x2):
        g = ou_ghat(self.lam, self.T, x1, x2, self.stated_form)
        return np.asarray(u1) * np.asarray(u2) * g / self.T

    def symmetrize(self):
        return self

    def _ghat_sq_double_integral(self, p: int, window: Window) -> float:
        # int int Ghat(x, x')^p dx dx' over [x_lo, T]^2
        lam, T = self.lam, self.T
        L = -window.x_lo
        E = math.exp(-2.0 * lam * T)
        both_neg = (1.0 - E) ** p * ((1.0 - math.exp(-p * lam * L)) / (p * lam)) ** 2
        # 2 * int_0^T e^{p lam x}(e^{-2 lam x} - E)^p (e^{p lam x} - e^{-p lam L})/(p lam) dx
        first = 0.0   # int_0^T e^{2 p lam x} (e^{-2 lam x} - E)^p dx
        second = 0.0  # int_0^T e^{p lam x} (e^{-2 lam x} - E)^p dx
        for k in range(p + 1):
            cmb = math.comb(p, k) * (-1.0) ** k
            if k == 0:
                first += cmb * T
            else:
                first += cmb * (1.0 - math.exp(-2.0 * lam * k * T)) / (2.0 * lam * k)
            if 2 * k == p:
                second += cmb * T * math.exp(-2.0 * lam * k * T)
            else:
                d = lam * (2.0 * k - p)
                second += cmb * (math.exp(-p * lam * T) - math.exp(-2.0 * lam * k * T)) / d
        pos = (2.0 / (p * lam)) * (first - math.exp(-p * lam * L) * second)
        return both_neg + pos

    def lp_norm(self, p, control, window):
        mom = control.abs_moment(p)
        return mom ** 2 * self._ghat_sq_double_integral(p, window) / self.T ** p

    def partial_integral(self, control, window, u, x):
        # int H((u,x), z) mu(dz): the u-part contributes the first moment
        lam, T = self.lam, self.T
        k1 = control.moment(1)
        if k1 == 0.0:
            return np.zeros_like(np.asarray(x, dtype=float))
        hi = min(window.x_hi, T)
        if window.x_lo < 0.0 < hi:
            base_edges = np.concatenate([exp_refined_edges(window.x_lo, 0.0, 1.0 / lam)[:-1],
                                         exp_refined_edges(0.0, hi, 1.0 / lam)])
        else:
            base_edges = exp_refined_edges(window.x_lo, hi, 1.0 / lam)
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        for i, xi in enumerate(x):
            edges = base_edges
            if window.x_lo < xi < hi:
                edges = np.unique(np.concatenate([base_edges, [xi]]))  # kink at t = x_i
            val, _ = integrate_checked(
                lambda t: ou_ghat(lam, T, np.full_like(t, xi), t, self.stated_form),
                edges)
            out[i] = val
        return np.asarray(u) * k1 * out / T

    def double_integral(self, control, window):
        k1 = control.moment(1)
        if k1 == 0.0:
            return 0.0
        return k1 ** 2 * self._ghat_sq_double_integral(1, window) / self.T

    def support_excess(self, window):
        lam, T = self.lam, self.T
        L = -window.x_lo
        # L2 mass with either coordinate below -L decays like e^{-2 lam L}
        return self._ghat_sq_double_integral(2, Window(-L - 40.0 / lam, T)) * math.exp(-2 * lam * L) / T ** 2

    # ---- contraction machinery --------------------------------------------

    def pair_overlap(self, y, yp, window: Window):
        """W(y, y') = int_window Ghat(x, y) Ghat(x, y') dx, exact and stable."""
        lam, T = self.lam, self.T
        L = -window.x_lo
        E = math.exp(-2.0 * lam * T)
        y = np.asarray(y, dtype=float)
        yp = np.asarray(yp, dtype=float)
        lo = np.minimum(y, yp)
        hi = np.maximum(y, yp)
        a = np.maximum(lo, 0.0)
        b = np.maximum(hi, 0.0)
        s = lo + hi
        # e^{lam s} P1, P1 = (e^{-2 lam a}-E)(e^{-2 lam b}-E) int_{-L}^a e^{2 lam x} dx
        f1 = np.exp(lam * (s - 2.0 * b)) - np.exp(lam * s - 2.0 * lam * T)
        p1 = f1 * ((1.0 - np.exp(-2.0 * lam * (T - a)))
                   - np.exp(-2.0 * lam * (L + a)) + math.exp(-2.0 * lam * (T + L))) / (2.0 * lam)
        # e^{lam s} P2 over x in (a, b)
        p2 = (f1 * (b - a)
              - (np.exp(lam * s - 2.0 * lam * T) - np.exp(lam * (s + 2.0 * b) - 4.0 * lam * T)
                 - np.exp(lam * (s + 2.0 * (a - b)) - 2.0 * lam * T)
                 + np.exp(lam * (s + 2.0 * a) - 4.0 * lam * T)) / (2.0 * lam))
        # e^{lam s} P3 over x in (b, T)
        p3 = ((np.exp(lam * (s - 2.0 * b)) - np.exp(lam * s - 2.0 * lam * T)) / (2.0 * lam)
              - 2.0 * (T - b) * np.exp(lam * s - 2.0 * lam * T)
              + (np.exp(lam * s - 2.0 * lam * T) - np.exp(lam * (s + 2.0 * b) - 4.0 * lam * T)) / (2.0 * lam))
        return p1 + p2 + p3

    def _shape_power_section(self, p: int, y, window: Window):
        """C_p(y) = int_window Ghat(x, y)^p dx, vectorized in y."""
        lam, T = self.lam, self.T
        L = -window.x_lo
        E = math.exp(-2.0 * lam * T)
        y = np.asarray(y, dtype=float)
        a = np.maximum(y, 0.0)
        # x < a piece, with e^{p lam y} folded in so every exponent stays <= 0:
        # A1 = (e^{-2 lam a} - E) e^{lam (y + a)},  A2 = (e^{-2 lam a} - E) e^{lam (y - L)}
        a1 = np.exp(lam * (y - a)) - np.exp(lam * (y + a) - 2.0 * lam * T)
        a2 = np.exp(lam * (y - 2.0 * a) - lam * L) - np.exp(lam * y - 2.0 * lam * T - lam * L)
        piece1 = (a1 ** p - a2 ** p) / (p * lam)
        # x in (a, T] piece: sum_k C(p,k)(-1)^k E^k e^{p lam y} int_a^T e^{lam(2k-p)x} dx
        piece2 = np.zeros_like(y)
        for k in range(p + 1):
            cmb = math.comb(p, k) * (-1.0) ** k
            if 2 * k == p:
                piece2 += cmb * (T - a) * np.exp(p * lam * y - 2.0 * lam * k * T)
            else:
                d = lam * (2.0 * k - p)
                hi_t = np.exp(p * lam * (y - T) + 2.0 * lam * k * (T - T))  # e^{p lam y + (2k-p) lam T - 2k lam T}
                lo_t = np.exp(p * lam * (y - a) + 2.0 * lam * k * (a - T))
                piece2 += cmb * (hi_t - lo_t) / d
        return piece1 + piece2

    def contraction_norms(self, control, window, nodes: int = 18):
        """Squared norms of the three quadratic contractions, by exact section
        integrals and panel quadrature on the outer variables.

        Returns (n11, n21, n10, rel_discrepancy) where the last entry is the
        two-level quadrature check on the double integral.
        """
        from .quadrature import panel_points

        lam, T = self.lam, self.T
        k2 = control.moment(2)
        k4 = control.moment(4)
        L = -window.x_lo

        # n21 = n10 = K4 K2^2 / T^4 * int C_2(y)^2 dy  (reduction identity,
        # symmetric kernel: the arity-3 norm collapses to the same section integral)
        y_edges = np.concatenate([exp_refined_edges(-L, 0.0, 1.0 / lam)[:-1],
                                  exp_refined_edges(0.0, T, 1.0 / lam)])
        sec, _ = integrate_checked(lambda y: self._shape_power_section(2, y, window) ** 2,
                                   y_edges, nodes=nodes)
        n21 = k4 * k2 ** 2 * sec / T ** 4
        n10 = n21

        # n11 = K2^4 / T^2 * int int W(y, y')^2 dy dy', folded to y' = y + s, s > 0
        smax = min(40.0 / lam, T + L)

        def off_diagonal(y_nodes, y_weights, n_nodes):
            acc = 0.0
            for ynode, wy in zip(y_nodes, y_weights):
                hi_s = min(smax, T - ynode)
                if hi_s <= 0:
                    continue
                s_edges = exp_refined_edges(0.0, hi_s, 1.0 / lam)
                if 0.0 < -ynode < hi_s:
                    s_edges = np.unique(np.concatenate([s_edges, [-ynode]]))
                sp, sw = panel_points(s_edges, n_nodes)
                vals = self.pair_overlap(np.full_like(sp, ynode), ynode + sp, window) ** 2
                acc += wy * float(sw @ vals)
            return acc

        yp, yw = panel_points(y_edges, nodes)
        off = off_diagonal(yp, yw, nodes)
        yp2, yw2 = panel_points(y_edges, nodes + 6)
        off2 = off_diagonal(yp2, yw2, nodes + 6)
        disc = abs(off - off2) / max(abs(off2), 1e-300)
        n11 = k2 ** 4 * 2.0 * off2 / T ** 4
        return n11, n21, n10, disc

    def sqrt4_section_integral(self, window: Window, nodes: int = 18) -> float:
        """int (C_4(y))^{1/2} dy, for the fourth-power integrability check."""
        lam, T = self.lam, self.T
        L = -window.x_lo
        edges = np.concatenate([exp_refined_edges(-L, 0.0, 1.0 / lam)[:-1],
                                exp_refined_edges(0.0, T, 1.0 / lam)])
        val, _ = integrate_checked(
            lambda y: np.sqrt(np.maximum(self._shape_power_section(4, y, window), 0.0)),
            edges, nodes=nodes)
        return val


@dataclass(frozen=True)
class OUDiagHstarKernel(Kernel):
    """Diagonal (single-integral) kernel of the time-averaged squared OU
    level: Hstar(u, x) = u^2 Ghat(x, x) / T on x <= T."""

    lam: float
    T: float
    stated_form: bool = False
    arity = 1

    def __call__(self, u, x):
        g = ou_ghat(self.lam, self.T, x, x, self.stated_form)
        return np.asarray(u) ** 2 * g / self.T

    def _shape_integral(self, p: int, window: Window) -> float:
        # int Ghat(x,x)^p dx = int_{-L}^0 e^{2 p lam x}(1-E)^p + int_0^T (1-e^{-2 lam (T-x)})^p
        lam, T = self.lam, self.T
        L = -window.x_lo
        E = math.exp(-2.0 * lam * T)
        neg = (1.0 - E) ** p * (1.0 - math.exp(-2.0 * p * lam * L)) / (2.0 * p * lam)
        pos = _binom_time_integral(p, 2.0 * lam, min(window.x_hi, T))
        return neg + pos

    def lp_norm(self, p, control, window):
        return control.abs_moment(2 * p) * self._shape_integral(p, window) / self.T ** p

    def integral(self, control, window):
        return control.moment(2) * self._shape_integral(1, window) / self.T

    def variance_exact(self, control, T_scale: float, window: Window) -> float:
        """Exact variance of I1(sqrt(T_scale) * Hstar) on the window."""
        return T_scale * control.moment(4) * self._shape_integral(2, window) / self.T ** 2

    def support_excess(self, window):
        lam, T = self.lam, self.T
        L = -window.x_lo
        return (1.0 - math.exp(-2 * lam * T)) ** 2 * math.exp(-4 * lam * L) / (4 * lam * T ** 2)


@dataclass(frozen=True)
class OUInstantKernel(Kernel):
    """Pair kernel of the squared OU level at one instant t:
    2 lam u u' e^{-lam(t-x) - lam(t-x')} on (-inf, t]^2."""

    lam: float
    t: float
    arity = 2

    def __call__(self, u1, x1, u2, x2):
        lam, t = self.lam, self.t
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        inside = (x1 <= t) & (x2 <= t)
        val = 2.0 * lam * np.asarray(u1) * np.asarray(u2) * np.exp(-lam * (2.0 * t - x1 - x2))
        return np.where(inside, val, 0.0)

    def symmetrize(self):
        return self

    def lp_norm(self, p, control, window):
        lam, t = self.lam, self.t
        L = -window.x_lo
        time_part = (1.0 - math.exp(-p * lam * (t + L))) / (p * lam)
        return control.abs_moment(p) ** 2 * (2.0 * lam) ** p * time_part ** 2

    def partial_integral(self, control, window, u, x):
        lam, t = self.lam, self.t
        k1 = control.moment(1)
        x = np.asarray(x, dtype=float)
        L = -window.x_lo
        time_part = (1.0 - math.exp(-lam * (t + L))) / lam
        val = 2.0 * lam * np.asarray(u) * np.exp(-lam * (t - x)) * k1 * time_part
        return np.where(x <= t, val, 0.0)

    def double_integral(self, control, window):
        lam, t = self.lam, self.t
        k1 = control.moment(1)
        L = -window.x_lo
        time_part = (1.0 - math.exp(-lam * (t + L))) / lam
        return 2.0 * lam * k1 ** 2 * time_part ** 2


# ---------------------------------------------------------------------------
# hazard moving-average kernels k(t, x)
# ---------------------------------------------------------------------------


class HazardKernel:
    """Nonnegative moving-average kernel k(t, x) with closed-form time
    integrals; h(t) = sum_i u_i k(t, x_i)."""

    def __call__(self, t, x):
        raise NotImplementedError

    def time_integral(self, x, T):
        """w(x) = int_0^T k(s, x) ds."""
        raise NotImplementedError

    def pair_time_integral(self, x1, x2, T):
        """int_0^T k(t, x1) k(t, x2) dt."""
        raise NotImplementedError

    def x_support(self, T: float) -> tuple[float, float]:
        """Smallest x-interval outside which k(t, .) vanishes for all t in [0, T]."""
        raise NotImplementedError


@dataclass(frozen=True)
class RectHazardKernel(HazardKernel):
    tau: float

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("bandwidth must be positive")

    def __call__(self, t, x):
        return (np.abs(np.asarray(t, dtype=float) - np.asarray(x, dtype=float)) <= self.tau).astype(float)

    def time_integral(self, x, T):
        x = np.asarray(x, dtype=float)
        return np.maximum(0.0, np.minimum(x + self.tau, T) - np.maximum(x - self.tau, 0.0))

    def pair_time_integral(self, x1, x2, T):
        lo = np.maximum(np.maximum(np.asarray(x1), np.asarray(x2)) - self.tau, 0.0)
        hi = np.minimum(np.minimum(np.asarray(x1), np.asarray(x2)) + self.tau, T)
        return np.maximum(0.0, hi - lo)

    def x_support(self, T):
        return (0.0, T + self.tau)


@dataclass(frozen=True)
class DykstraLaudHazardKernel(HazardKernel):
    def __call__(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        return ((x >= 0.0) & (x <= t)).astype(float)

    def time_integral(self, x, T):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0.0, np.maximum(T - x, 0.0), 0.0)

    def pair_time_integral(self, x1, x2, T):
        m = np.maximum(np.asarray(x1), np.asarray(x2))
        return np.where(m >= 0.0, np.maximum(T - m, 0.0), 0.0)

    def x_support(self, T):
        return (0.0, T)


@dataclass(frozen=True)
class OUHazardKernel(HazardKernel):
    lam: float

    def __call__(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        inside = (x >= 0.0) & (x <= t)
        return np.where(inside, math.sqrt(2.0 * self.lam) * np.exp(-self.lam * (t - x)), 0.0)

    def time_integral(self, x, T):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0.0) & (x <= T)
        return np.where(inside,
                        math.sqrt(2.0 * self.lam) * (1.0 - np.exp(-self.lam * (T - x))) / self.lam,
                        0.0)

    def pair_time_integral(self, x1, x2, T):
        lam = self.lam
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        m = np.maximum(x1, x2)
        inside = (np.minimum(x1, x2) >= 0.0) & (m <= T)
        val = np.exp(-lam * np.abs(x1 - x2)) - np.exp(lam * (x1 + x2 - 2.0 * T))
        return np.where(inside, val, 0.0)

    def x_support(self, T):
        return (0.0, T)
