"""Gamma-family special functions and Mellin-Barnes evaluation of Meijer G /
Fox H functions (single, bivariate and multivariate).

All H-functions are evaluated on straight vertical contours ``Re s = c`` with
composite Gauss-Legendre panels. Gamma products are accumulated as complex
logarithms so that large imaginary parts and large prefactors never overflow.

Single-variate convention (x > 0)::

    H(x) = 1/(2 pi i) Int  prod_{j<m} G(b_j + B_j s) prod_{j<n} G(1 - a_j - A_j s)
                           ------------------------------------------------- x^{-s} ds
                           prod_{j>=m} G(1 - b_j - B_j s) prod_{j>=n} G(a_j + A_j s)

Multivariate: every variable carries its own single-variate kernel (a *block*)
and the variables are coupled through extra gamma factors
``G(shift + sum_i scales_i s_i)`` in the numerator or denominator.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, special

logger = logging.getLogger(__name__)

__all__ = [
    "GammaPoleError",
    "ContourError",
    "ConvergenceError",
    "DimensionError",
    "GammaPair",
    "FoxHSpec",
    "LinearGamma",
    "MultiFoxHSpec",
    "ContourConfig",
    "ContourInfo",
    "log_gamma_complex",
    "upper_incomplete_gamma",
    "bessel_k",
    "meijer_g",
    "fox_h",
    "fox_h_bivariate",
    "fox_h_multivariate",
    "fox_h_residues",
]


class GammaPoleError(ValueError):
    """A gamma function was evaluated at one of its poles."""


class ContourError(RuntimeError):
    """No vertical contour separates the pole families."""


class ConvergenceError(RuntimeError):
    """Quadrature did not reach the requested tolerance."""


class DimensionError(ValueError):
    """Too many Mellin-Barnes variables for the configured cap."""


# ---------------------------------------------------------------------------
# scalar special functions
# ---------------------------------------------------------------------------


def _is_gamma_pole(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return (z.imag == 0) & (z.real <= 0) & (np.round(z.real) == z.real)


def log_gamma_complex(z):
    """Principal branch of log Gamma(z) for complex (array) input."""
    z = np.asarray(z, dtype=complex)
    if np.any(_is_gamma_pole(z)):
        raise GammaPoleError("log Gamma evaluated at a non-positive integer")
    out = special.loggamma(z)
    return out if out.ndim else complex(out)


def _gamma_cf(a: float, x: float) -> float:
    # modified Lentz, valid for x > 0 and any real a
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0 else 1.0 / tiny
    h = d
    for i in range(1, 2000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x + a * math.log(x)) * h


def _gamma_series_lower(a: float, x: float) -> float:
    # gamma(a, x) for a > 0
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(5000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + a * math.log(x))


_ZETA_K = special.zeta(np.arange(2, 60), 1.0)


def _lgamma1p(a: float) -> float:
    # log Gamma(1 + a) = -euler_gamma a + sum_k (-a)^k zeta(k)/k, |a| <= 1/2
    k = np.arange(2, 60)
    return float(-np.euler_gamma * a + np.sum(_ZETA_K * (-a) ** k / k))


def _upper_gamma_small_a(a: float, x: float) -> float:
    # Gamma(a) - x^a/a = x^a expm1(lgamma(1+a) - a log x)/a avoids the 1/a cancellation
    lx = math.log(x)
    xa = math.exp(a * lx)
    head = xa * math.expm1(_lgamma1p(a) - a * lx) / a
    tail, term, n = 0.0, 1.0, 0
    while True:
        n += 1
        term *= -x / n
        add = term / (a + n)
        tail += add
        if abs(add) < 1e-17 * max(abs(tail), 1e-300):
            break
    return head - xa * tail


def _upper_gamma_scalar(a: float, x: float) -> float:
    if x < 0:
        raise ValueError("upper_incomplete_gamma requires x >= 0")
    if x == 0:
        if a <= 0:
            raise ValueError("Gamma(a, 0) diverges for a <= 0")
        return math.gamma(a)
    if 0 < abs(a) <= 0.5 and x < 2.0:
        return _upper_gamma_small_a(a, x)
    if a <= 0:
        if x >= 1.0:
            return _gamma_cf(a, x)
        # upward recurrence Gamma(a,x) = (Gamma(a+1,x) - x^a e^-x)/a
        k = int(math.floor(-a)) + 1
        if float(a).is_integer():
            # a = 0, -1, ...: start from E1(x) = Gamma(0, x)
            val = float(special.exp1(x))
            b = 0.0
            while b > a:
                b -= 1.0
                val = (val - math.exp(b * math.log(x) - x)) / b
            return val
        val = _upper_gamma_scalar(a + k, x)
        b = a + k
        for _ in range(k):
            b -= 1.0
            val = (val - math.exp(b * math.log(x) - x)) / b
        return val
    if x < a + 1.0:
        return math.gamma(a) - _gamma_series_lower(a, x) if a < 171 else (
            math.exp(special.gammaln(a)) * float(special.gammaincc(a, x))
        )
    return _gamma_cf(a, x)


def upper_incomplete_gamma(a, x):
    """Gamma(a, x) = int_x^inf t^(a-1) e^(-t) dt, also for a <= 0 when x > 0."""
    a_arr, x_arr = np.broadcast_arrays(np.asarray(a, float), np.asarray(x, float))
    if np.any(x_arr < 0):
        raise ValueError("upper_incomplete_gamma requires x >= 0")
    out = np.array([_upper_gamma_scalar(float(ai), float(xi))
                    for ai, xi in zip(a_arr.ravel(), x_arr.ravel())])
    out = out.reshape(a_arr.shape)
    return float(out) if out.ndim == 0 else out


def bessel_k(nu, x):
    """Modified Bessel function of the second kind K_nu(x), x > 0."""
    x = np.asarray(x, float)
    if np.any(x <= 0):
        raise ValueError("bessel_k requires x > 0")
    out = special.kv(np.abs(np.asarray(nu, float)), x)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GammaPair:
    shift: float
    scale: float = 1.0


def _pairs(items) -> tuple[GammaPair, ...]:
    out = []
    for it in items:
        if isinstance(it, GammaPair):
            out.append(it)
        elif np.ndim(it) == 0:
            out.append(GammaPair(float(it), 1.0))
        else:
            out.append(GammaPair(float(it[0]), float(it[1])))
    return tuple(out)


@dataclass(frozen=True)
class FoxHSpec:
    """Orders and parameter pairs of H^{m,n}_{p,q}.

    ``upper`` holds the (a_j, A_j) pairs, ``lower`` the (b_j, B_j) pairs. Pairs
    may be given as ``GammaPair``, ``(shift, scale)`` tuples or bare shifts
    (scale 1).
    """

    m: int
    n: int
    upper: tuple = ()
    lower: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "upper", _pairs(self.upper))
        object.__setattr__(self, "lower", _pairs(self.lower))
        if not (0 <= self.m <= self.q and 0 <= self.n <= self.p):
            raise ValueError(f"invalid orders m={self.m}, n={self.n}, p={self.p}, q={self.q}")
        if any(g.scale <= 0 for g in self.upper + self.lower):
            raise ValueError("all scales must be positive")

    @property
    def p(self) -> int:
        return len(self.upper)

    @property
    def q(self) -> int:
        return len(self.lower)

    @classmethod
    def meijer(cls, m: int, n: int, a: Sequence[float], b: Sequence[float]) -> "FoxHSpec":
        return cls(m, n, tuple(GammaPair(float(v)) for v in a),
                   tuple(GammaPair(float(v)) for v in b))

    @property
    def is_meijer(self) -> bool:
        return all(g.scale == 1.0 for g in self.upper + self.lower)

    def left_poles_max(self) -> float:
        vals = [-g.shift / g.scale for g in self.lower[: self.m]]
        return max(vals) if vals else -math.inf

    def right_poles_min(self) -> float:
        vals = [(1.0 - g.shift) / g.scale for g in self.upper[: self.n]]
        return min(vals) if vals else math.inf

    def log_kernel(self, s):
        """log of the gamma ratio at complex ``s`` (array)."""
        s = np.asarray(s, dtype=complex)
        out = np.zeros(s.shape, dtype=complex)
        for j, g in enumerate(self.lower):
            if j < self.m:
                out += log_gamma_complex(g.shift + g.scale * s)
            else:
                out -= log_gamma_complex(1.0 - g.shift - g.scale * s)
        for j, g in enumerate(self.upper):
            if j < self.n:
                out += log_gamma_complex(1.0 - g.shift - g.scale * s)
            else:
                out -= log_gamma_complex(g.shift + g.scale * s)
        return out

    def _scales(self) -> list[float]:
        return [g.scale for g in self.upper + self.lower]

    def pole_distance(self, c: float) -> float:
        d = math.inf
        for g in self.lower[: self.m]:
            pole = -g.shift / g.scale
            d = min(d, abs(c - pole))
        for g in self.upper[: self.n]:
            pole = (1.0 - g.shift) / g.scale
            d = min(d, abs(c - pole))
        return d


@dataclass(frozen=True)
class LinearGamma:
    """Gamma(shift + sum_i scales[i] * s_i) coupling several variables."""

    shift: float
    scales: tuple

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(float(v) for v in self.scales))


@dataclass(frozen=True)
class MultiFoxHSpec:
    """Coupled Mellin-Barnes kernel in ``len(blocks)`` variables.

    ``num`` gamma factors must keep a positive real argument on the contour;
    ``den`` factors are entire in the reciprocal and impose no constraint.
    """

    blocks: tuple
    num: tuple = ()
    den: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "num", tuple(self.num))
        object.__setattr__(self, "den", tuple(self.den))
        if not self.blocks:
            raise ValueError("need at least one variable")
        for lg in self.num + self.den:
            if len(lg.scales) != self.nvars:
                raise ValueError("coupled gamma scale vector length must equal nvars")

    @property
    def nvars(self) -> int:
        return len(self.blocks)


@dataclass
class ContourConfig:
    shift: float | Sequence[float] | None = None
    half_height: float | Sequence[float] | None = None
    nodes: int = 64
    tolerance: float = 1e-9
    atol: float = 0.0
    order: int = 8
    max_nodes: int = 1 << 15
    max_grid: int = 40_000_000
    max_vars: int = 4
    debug: bool = False

    def __post_init__(self):
        if self.nodes < 32:
            raise ValueError("nodes must be at least 32")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.half_height is not None and np.any(np.asarray(self.half_height, float) <= 0):
            raise ValueError("half_height must be positive")


@dataclass
class ContourInfo:
    shift: tuple
    half_height: tuple
    nodes: tuple
    rel_change: float
    tail_fraction: float
    imag_residual: float
    iterations: int
    log: list = field(default_factory=list)

    def __str__(self) -> str:
        return (f"shift={self.shift} half_height={self.half_height} nodes={self.nodes} "
                f"rel_change={self.rel_change:.2e} tail={self.tail_fraction:.2e} "
                f"imag_residual={self.imag_residual:.2e} iterations={self.iterations}")


# ---------------------------------------------------------------------------
# contour placement
# ---------------------------------------------------------------------------


def _choose_shifts(blocks, num, logx_ref, total_log_real, user_shift):
    nv = len(blocks)
    lo = np.array([b.left_poles_max() for b in blocks])
    hi = np.array([b.right_poles_min() for b in blocks])
    if user_shift is not None:
        c = np.atleast_1d(np.asarray(user_shift, float))
        if c.size != nv:
            raise ValueError("shift must have one entry per variable")
        _check_separation(blocks, num, c)
        return c
    # LP: maximise the smallest slack (capped at 1)
    A, ub = [], []
    for i in range(nv):
        if np.isfinite(lo[i]):
            row = np.zeros(nv + 1); row[i] = -1.0; row[-1] = 1.0
            A.append(row); ub.append(-lo[i])
        if np.isfinite(hi[i]):
            row = np.zeros(nv + 1); row[i] = 1.0; row[-1] = 1.0
            A.append(row); ub.append(hi[i])
    for lg in num:
        e = np.asarray(lg.scales)
        row = np.zeros(nv + 1); row[:nv] = -e; row[-1] = np.linalg.norm(e)
        A.append(row); ub.append(lg.shift)
    base = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
    bounds = [(b - 200.0, b + 200.0) for b in base] + [(None, 1.0)]
    cost = np.zeros(nv + 1); cost[-1] = -1.0
    if A:
        res = optimize.linprog(cost, A_ub=np.array(A), b_ub=np.array(ub), bounds=bounds,
                               method="highs")
        if not res.success:
            raise ContourError(f"contour placement failed: {res.message}")
        c0, eps = res.x[:nv], res.x[-1]
        if eps > 1e-9:
            # second stage: stay close to the pole boundary at near-maximal slack
            A2 = np.hstack([np.array(A)[:, :nv], np.zeros((len(A), nv))])
            rhs = np.array(ub) - 0.999 * eps * np.array(A)[:, -1]
            eye = np.eye(nv)
            A2 = np.vstack([A2, np.hstack([eye, -eye]), np.hstack([-eye, -eye])])
            rhs = np.concatenate([rhs, base, -base])
            res2 = optimize.linprog(np.concatenate([np.zeros(nv), np.ones(nv)]), A_ub=A2,
                                    b_ub=rhs, bounds=bounds[:nv] + [(0, None)] * nv,
                                    method="highs")
            if res2.success:
                c0 = res2.x[:nv]
    else:
        c0, eps = np.zeros(nv), 1.0
    if eps <= 1e-9:
        raise ContourError("pole families interleave: no separating vertical contour")
    margin = 0.5 * eps
    # refine inside the shrunken feasible set towards the smallest integrand
    cons = []
    for i in range(nv):
        if np.isfinite(lo[i]):
            cons.append({"type": "ineq", "fun": (lambda c, i=i: c[i] - lo[i] - margin)})
        if np.isfinite(hi[i]):
            cons.append({"type": "ineq", "fun": (lambda c, i=i: hi[i] - c[i] - margin)})
    for lg in num:
        e = np.asarray(lg.scales); nrm = np.linalg.norm(e)
        cons.append({"type": "ineq", "fun": (lambda c, e=e, s=lg.shift, nrm=nrm:
                                             s + e @ c - margin * nrm)})

    def objective(c):
        val = total_log_real(c) - float(np.dot(c, logx_ref))
        return val if np.isfinite(val) else 1e300

    try:
        res = optimize.minimize(objective, c0, method="SLSQP", constraints=cons,
                                bounds=[(v - 1000.0, v + 1000.0) for v in c0],
                                options={"maxiter": 200, "ftol": 1e-10})
        c = res.x if res.success and objective(res.x) <= objective(c0) else c0
    except (ValueError, FloatingPointError):
        c = c0
    try:
        _check_separation(blocks, num, c, margin=0.99 * margin)
    except ContourError:
        c = c0
    return np.asarray(c, float)


def _check_separation(blocks, num, c, margin=0.0):
    for i, b in enumerate(blocks):
        if not (b.left_poles_max() + margin < c[i] < b.right_poles_min() - margin):
            raise ContourError(
                f"shift {c[i]:.6g} of variable {i} does not separate poles "
                f"(left max {b.left_poles_max():.6g}, right min {b.right_poles_min():.6g})")
    for lg in num:
        if lg.shift + float(np.dot(lg.scales, c)) <= margin * 0.0:
            raise ContourError("coupled gamma argument not positive on the contour")


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

_PROBES = np.concatenate([[0.0], 0.25 * 1.25 ** np.arange(0, 44)])


def _gl_nodes(T: float, npan: int, order: int, half: bool = False):
    """Composite Gauss-Legendre on [-T, T] (or [0, T]) with ``npan`` panels per half-line."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0 if half else -T, T, (1 if half else 2) * npan + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    hw = 0.5 * (edges[1:] - edges[:-1])
    t = (mid[:, None] + hw[:, None] * x[None, :]).ravel()
    wt = (hw[:, None] * w[None, :]).ravel()
    outer = np.repeat(np.abs(mid) > T - 2.0 * hw[0], order)
    return t, wt, outer


class _Problem:
    """Log-integrand of a (coupled) Mellin-Barnes kernel on a tensor grid."""

    def __init__(self, blocks, num, den):
        self.blocks = blocks
        self.num = num
        self.den = den
        self.nv = len(blocks)

    def block_logs(self, i, s):
        return self.blocks[i].log_kernel(s)

    def coupled_log(self, s_list):
        out = 0.0
        for lg in self.num:
            arg = lg.shift + sum(e * s for e, s in zip(lg.scales, s_list))
            out = out + log_gamma_complex(arg)
        for lg in self.den:
            arg = lg.shift + sum(e * s for e, s in zip(lg.scales, s_list))
            out = out - log_gamma_complex(arg)
        return out

    def total_log_real(self, c):
        c = np.asarray(c, float)
        try:
            val = sum(np.real(self.block_logs(i, np.array([c[i]], complex))[0])
                      for i in range(self.nv))
            cl = self.coupled_log([np.array([ci], complex) for ci in c])
            if not np.isscalar(cl) or cl != 0.0:
                val += float(np.real(np.asarray(cl).ravel()[0]))
        except GammaPoleError:
            return math.inf
        return float(val)

    def log_growth(self, i, T):
        """Upper bound on the phase rate of the integrand in variable i up to height T."""
        tot = 0.0
        for g in self.blocks[i].upper + self.blocks[i].lower:
            tot += g.scale * math.log(2.0 + abs(g.shift) + g.scale * T)
        for lg in self.num + self.den:
            e = abs(lg.scales[i])
            if e:
                tot += e * math.log(2.0 + abs(lg.shift) + sum(map(abs, lg.scales)) * T)
        return tot

    def pole_distance(self, i, c):
        d = self.blocks[i].pole_distance(c[i])
        for lg in self.num:
            e = lg.scales[i]
            if e != 0:
                d = min(d, (lg.shift + float(np.dot(lg.scales, c))) / abs(e))
        return d


def _probe_height(prob: _Problem, c, i, tol):
    t = _PROBES
    s_list = []
    for j in range(prob.nv):
        if j == i:
            s_list.append(c[j] + 1j * t)
        else:
            s_list.append(np.full(t.shape, c[j], dtype=complex))
    ell = np.zeros(t.shape)
    for j in range(prob.nv):
        ell += np.real(prob.block_logs(j, s_list[j]))
    cl = prob.coupled_log(s_list)
    ell = ell + np.real(cl)
    peak = ell.max()
    thr = peak + math.log(tol) - 2.0 * math.log(10.0)
    above = np.nonzero(ell >= thr)[0]
    last = above.max()
    if last == len(t) - 1:
        raise ConvergenceError(
            f"integrand in variable {i} does not decay along the contour (peak {peak:.3g}, "
            f"value {ell[-1]:.3g} at t={t[-1]:.3g})")
    return float(t[last + 1])


def _contract(L, weights, phases):
    """sum_grid W * exp(L) * prod_i phase_i(x) for every x -> (nx,) complex."""
    nv = L.ndim
    E = L
    for i in range(nv):
        shape = [1] * nv; shape[i] = -1
        E = E * weights[i].reshape(shape)
    # first axis by matmul
    nx = phases[0].shape[0]
    A = phases[0] @ E.reshape(E.shape[0], -1)  # (nx, rest)
    A = A.reshape((nx,) + E.shape[1:])
    for i in range(1, nv):
        ph = phases[i]
        shape = [nx] + [1] * (A.ndim - 1)
        shape[1] = ph.shape[1]
        A = (A * ph.reshape(shape)).sum(axis=1)
    return A


def _integrate(prob: _Problem, logx: np.ndarray, log_pref, cfg: ContourConfig):
    """(1/2pi)^N int exp(kernel - s.logx + log_pref) dt over the product contour."""
    nv = prob.nv
    if nv > cfg.max_vars:
        raise DimensionError(f"{nv} Mellin-Barnes variables exceed the cap of {cfg.max_vars}")
    if nv > 2:
        warnings.warn(f"{nv}-fold contour quadrature: cost grows like nodes^{nv}",
                      RuntimeWarning, stacklevel=3)
    logx = np.atleast_2d(np.asarray(logx, float))
    nx = logx.shape[0]
    log_pref = np.broadcast_to(np.asarray(log_pref, float), (nx,))
    logx_ref = np.median(logx, axis=0)

    c = _choose_shifts(prob.blocks, prob.num, logx_ref, prob.total_log_real, cfg.shift)

    tol = cfg.tolerance
    if cfg.half_height is not None:
        T = np.broadcast_to(np.asarray(cfg.half_height, float), (nv,)).copy()
    else:
        T = np.array([_probe_height(prob, c, i, tol) for i in range(nv)])
    npan = []
    for i in range(nv):
        freq = np.max(np.abs(logx[:, i])) + prob.log_growth(i, T[i]) + 1.0
        h = min(1.0, 2.0 * math.pi / freq, max(prob.pole_distance(i, c), 1e-3))
        npan.append(max(int(math.ceil(T[i] / h)), int(math.ceil(cfg.nodes / (2 * cfg.order))), 2))
    npan = np.array(npan)

    # the real part of -s.logx is constant on the contour: pull it out
    log_scale_x = -(logx @ c) + log_pref  # (nx,)

    def evaluate(npan, T):
        # conjugate symmetry f(conj s) = conj f(s): integrate t_0 >= 0 and double the real part
        ts, ws, outs, phases = [], [], [], []
        for i in range(nv):
            t, w, outer = _gl_nodes(T[i], int(npan[i]), cfg.order, half=(i == 0))
            ts.append(t); ws.append(w); outs.append(outer)
            phases.append(np.exp(-1j * np.outer(logx[:, i], t)))
        grid = int(np.prod([len(t) for t in ts]))
        if grid > cfg.max_grid:
            raise ConvergenceError(f"quadrature grid of {grid} nodes exceeds budget {cfg.max_grid}")
        s_1d = [c[i] + 1j * ts[i] for i in range(nv)]
        L = np.zeros([len(t) for t in ts], dtype=complex)
        for i in range(nv):
            shape = [1] * nv; shape[i] = -1
            L = L + prob.block_logs(i, s_1d[i]).reshape(shape)
        if prob.num or prob.den:
            mesh = np.meshgrid(*s_1d, indexing="ij", sparse=True)
            L = L + prob.coupled_log(mesh)
        Lmax = float(np.max(L.real))
        E = np.exp(L - Lmax)
        full = 2.0 * _contract(E, ws, phases).real
        inner_w = [np.where(o, 0.0, w) for o, w in zip(outs, ws)]
        inner = 2.0 * _contract(E, inner_w, phases).real
        l1 = np.abs(E)
        for w in reversed(ws):
            l1 = l1 @ w
        return full, inner, 2.0 * float(l1), Lmax

    def scaled(npan, T):
        full, inner, l1, Lmax = evaluate(npan, T)
        with np.errstate(over="ignore"):
            scale = np.exp(Lmax + log_scale_x) / (2.0 * math.pi) ** nv
        # changes below the rounding level of the absolute integral cannot be resolved
        floor = np.broadcast_to(np.finfo(float).eps * l1 * scale, scale.shape)
        return full * scale, np.abs(full - inner) * scale, floor

    log_lines = []
    it = 0
    prev, _, _ = scaled(np.maximum(npan // 2, 1), T)
    while True:
        it += 1
        vals, tail, floor = scaled(npan, T)
        msg = f"iter {it}: shift={np.round(c, 6)} T={np.round(T, 3)} panels={npan}"
        log_lines.append(msg)
        if cfg.debug:
            logger.debug(msg)
        floor_abs = np.maximum(cfg.atol, np.maximum(floor, 1e3 * np.finfo(float).tiny))
        denom = np.maximum(np.abs(vals), floor_abs / tol)
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(denom > 0, np.abs(vals - prev) / denom, 0.0)
            tailrel = np.where(denom > 0, tail / denom, 0.0)
        if not np.all(np.isfinite(vals)):
            raise ConvergenceError("non-finite quadrature value (overflow); " + "; ".join(log_lines))
        rel_max = float(np.max(rel)) if rel.size else 0.0
        tail_max = float(np.max(tailrel)) if rel.size else 0.0
        if rel_max <= tol and tail_max <= 0.1 * tol:
            break
        if tail_max > 0.1 * tol and cfg.half_height is None:
            T = T * 1.5
            npan = np.ceil(npan * 1.5).astype(int)
            prev, _, _ = scaled(npan, T)
            continue
        if 2 * np.max(npan) * cfg.order * 2 > cfg.max_nodes:
            raise ConvergenceError(
                f"no convergence: relative change {rel_max:.2e} (tolerance {tol:.1e}), "
                f"tail {tail_max:.2e}; " + "; ".join(log_lines))
        prev = vals
        npan = npan * 2
    # eps * int |integrand| bounds the attainable accuracy; a shared contour can push points
    # far from the reference argument past it, so those get their own contour
    tiny = 1e3 * np.finfo(float).tiny
    lossy = np.flatnonzero((floor > np.maximum(max(tol, 1e-6) * np.abs(vals), cfg.atol))
                           & (floor > tiny))
    if nx > 1 and lossy.size:
        vals = vals.copy()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            for j in lossy:
                vals[j] = _integrate(prob, logx[j:j + 1], log_pref[j:j + 1], cfg)[0][0]
    elif lossy.size:
        raise ConvergenceError(
            f"cancellation: value {vals[0]:.3e} is below the rounding level {floor[0]:.3e} "
            "of the integrand; " + "; ".join(log_lines))
    info = ContourInfo(shift=tuple(float(v) for v in c), half_height=tuple(float(v) for v in T),
                       nodes=tuple(int(2 * n * cfg.order) for n in npan), rel_change=rel_max,
                       tail_fraction=tail_max, imag_residual=_symmetry_residual(prob, c, T),
                       iterations=it, log=log_lines)
    if cfg.debug:
        logger.debug("contour diagnostics: %s", info)
    return vals, info


def _symmetry_residual(prob: _Problem, c, T) -> float:
    """max |f(conj s) - conj f(s)| / |f(s)| over probe points: the imaginary part
    the symmetric quadrature discards."""
    rng = np.random.default_rng(0)
    t = rng.uniform(-1.0, 1.0, size=(8, prob.nv)) * np.asarray(T)[None, :] * 0.5
    s = c[None, :] + 1j * t
    def logf(sv):
        out = sum(prob.block_logs(i, sv[:, i]) for i in range(prob.nv))
        if prob.num or prob.den:
            out = out + prob.coupled_log([sv[:, i] for i in range(prob.nv)])
        return out
    a, b = logf(s), logf(np.conj(s))
    diff = np.abs(np.exp(b - a.real) - np.conj(np.exp(a - a.real)))
    return float(np.max(diff))


# ---------------------------------------------------------------------------
# public evaluators
# ---------------------------------------------------------------------------


def _as_x(x):
    xa = np.asarray(x, float)
    if np.any(xa <= 0):
        raise ValueError("H-function argument must be positive")
    return xa


def fox_h(spec: FoxHSpec, x, cfg: ContourConfig | None = None, *, log_prefactor=0.0,
          full_output: bool = False):
    """Single-variate Fox H-function ``exp(log_prefactor) * H(x)``.

    ``x`` may be an array; all points share one contour and node set.
    """
    cfg = cfg or ContourConfig()
    xa = _as_x(x)
    flat = xa.ravel()
    pref = np.broadcast_to(np.asarray(log_prefactor, float), xa.shape).ravel()
    prob = _Problem((spec,), (), ())
    vals, info = _integrate(prob, np.log(flat)[:, None], pref, cfg)
    vals = vals.reshape(xa.shape)
    out = float(vals) if vals.ndim == 0 else vals
    return (out, info) if full_output else out


def meijer_g(spec: FoxHSpec, x, cfg: ContourConfig | None = None, **kw):
    """Meijer G-function; ``spec`` must have unit scales."""
    if not spec.is_meijer:
        raise ValueError("meijer_g needs a spec with unit scales; use fox_h")
    return fox_h(spec, x, cfg, **kw)


def fox_h_multivariate(spec: MultiFoxHSpec, xs, cfg: ContourConfig | None = None, *,
                       log_prefactor=0.0, full_output: bool = False):
    """N-variate H-function. ``xs`` has shape (nvars,) or (npoints, nvars)."""
    cfg = cfg or ContourConfig()
    xa = np.asarray(xs, float)
    single = xa.ndim == 1
    xa = np.atleast_2d(xa)
    if xa.shape[1] != spec.nvars:
        raise ValueError(f"expected {spec.nvars} arguments per point, got {xa.shape[1]}")
    _as_x(xa)
    pref = np.broadcast_to(np.asarray(log_prefactor, float), (xa.shape[0],))
    prob = _Problem(spec.blocks, spec.num, spec.den)
    vals, info = _integrate(prob, np.log(xa), pref, cfg)
    out = float(vals[0]) if single else vals
    return (out, info) if full_output else out


def fox_h_bivariate(spec: MultiFoxHSpec, x1, x2, cfg: ContourConfig | None = None, **kw):
    """Bivariate H-function; ``x1``/``x2`` broadcast against each other."""
    if spec.nvars != 2:
        raise ValueError("fox_h_bivariate needs a two-variable spec")
    a, b = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    pts = np.stack([a.ravel(), b.ravel()], axis=1)
    if "log_prefactor" in kw:
        kw["log_prefactor"] = np.broadcast_to(np.asarray(kw["log_prefactor"], float),
                                              a.shape).ravel()
    res = fox_h_multivariate(spec, pts, cfg, **kw)
    if kw.get("full_output"):
        vals, info = res
        vals = vals.reshape(a.shape)
        return (float(vals) if vals.ndim == 0 else vals), info
    vals = res.reshape(a.shape)
    return float(vals) if vals.ndim == 0 else vals


# ---------------------------------------------------------------------------
# residues (asymptotic expansions for small argument)
# ---------------------------------------------------------------------------


def _left_pole_list(spec: FoxHSpec, depth: int = 6):
    poles = []
    for g in spec.lower[: spec.m]:
        for k in range(depth):
            poles.append(-(g.shift + k) / g.scale)
    poles.sort(reverse=True)
    merged = []
    for p in poles:
        if not merged or abs(merged[-1] - p) > 1e-7 * max(1.0, abs(p)):
            merged.append(p)
    return merged


def fox_h_residues(spec: FoxHSpec, x, n_poles: int = 1, *, log_prefactor=0.0,
                   points: int = 128, return_poles: bool = False):
    """Sum of residues of the H-integrand at its ``n_poles`` rightmost left poles.

    For small ``x`` this is the leading part of the algebraic expansion
    ``H(x) = sum Res``. Multiple poles (coincident parameters) are handled by
    integrating around a small circle, which yields the logarithmic terms too.
    """
    xa = _as_x(x)
    lx = np.log(xa.ravel())
    pref = np.broadcast_to(np.asarray(log_prefactor, float), xa.shape).ravel()
    poles = _left_pole_list(spec, depth=max(6, n_poles + 2))
    right = spec.right_poles_min()
    chosen = poles[:n_poles]
    theta = 2.0 * math.pi * np.arange(points) / points
    total = np.zeros(lx.shape, dtype=complex)
    terms = []
    for k, p in enumerate(chosen):
        others = [q for q in poles if q != p] + ([right] if np.isfinite(right) else [])
        rad = 0.4 * min([abs(p - q) for q in others] + [1.0])
        s = p + rad * np.exp(1j * theta)
        logk = spec.log_kernel(s)
        # residue = mean over circle of f(s) * (s - p)
        expo = logk[None, :] - np.outer(lx, s) + pref[:, None]
        vals = np.mean(np.exp(expo) * (rad * np.exp(1j * theta))[None, :], axis=1)
        terms.append(vals.real)
        total += vals
    out = total.real.reshape(xa.shape)
    out = float(out) if out.ndim == 0 else out
    if return_poles:
        return out, chosen, [t.reshape(xa.shape) for t in terms]
    return out
