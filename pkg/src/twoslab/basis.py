"""Eigenfunctions of the two-slab problem and their inner products.

Each eigen-element n is a pair of cosines,

    phi_b(x) = A_b cos(lambda_b (x + b))   on [-b, 0],
    phi_a(x) = A_a cos(lambda_a (x - a))   on [0, a],

normalized so both slabs take the value 1 at the interface whenever
cos(lambda_b b) and cos(lambda_a a) stay away from zero.  When either
cosine (numerically) vanishes the interface value cannot be pinned to 1;
those modes fall back to the unit-norm null vector of the 2x2 interface
system and their norms are computed by quadrature instead of the closed
forms.

The family is orthogonal in the weighted inner product

    (K_b/kappa_b) <f, g>_{L2(-b,0)} + (K_a/kappa_a) <f, g>_{L2(0,a)},

with squared norms N_n; the derivative family is orthogonal with
weights K_b, K_a and squared norms M_n = lambda_bar_n * N_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import NumericalError, SlabSystem
from .eigensolver import EigenValuePair, find_eigenvalues

# |cos| below this at the interface marks the mode as degenerate.
DEGENERATE_COS_TOL = 1e-6


class DegenerateInterfaceError(NumericalError):
    """Closed-form norm requested for a degenerate-interface mode."""


@lru_cache(maxsize=128)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def gauss_legendre(f, lo: float, hi: float, order: int) -> float:
    """Gauss-Legendre quadrature of f over [lo, hi]; f takes ndarrays."""
    x, w = _leggauss(order)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    return float(half * np.dot(w, np.asarray(f(mid + half * x), dtype=float)))


def _quadrature_order(lam_max: float, length: float) -> int:
    # about 4 nodes per unit of phase keeps cos products at machine accuracy
    return max(64, int(math.ceil(4.0 * lam_max * length)))


@dataclass(frozen=True)
class EigenMode:
    """One eigen-element with its normalization and squared norms."""

    pair: EigenValuePair
    norm_N: float
    norm_M: float
    degenerate_interface: bool = False
    alt_theta_b: float = 1.0
    alt_theta_a: float = 1.0

    @property
    def amp_b(self) -> float:
        if self.degenerate_interface:
            return self.alt_theta_b
        return 1.0 / math.cos(self.pair.lambda_b * self._b)

    @property
    def amp_a(self) -> float:
        if self.degenerate_interface:
            return self.alt_theta_a
        return 1.0 / math.cos(self.pair.lambda_a * self._a)

    # geometry is stashed at construction so amplitudes are self-contained
    _b: float = 0.0
    _a: float = 0.0


def phi(mode: EigenMode, x, sys: SlabSystem):
    """Eigenfunction values; the x >= 0 branch uses the right slab."""
    xs = np.asarray(x, dtype=float)
    left = mode.amp_b * np.cos(mode.pair.lambda_b * (xs + sys.b))
    right = mode.amp_a * np.cos(mode.pair.lambda_a * (xs - sys.a))
    out = np.where(xs < 0.0, left, right)
    if np.isscalar(x):
        return float(out)
    return out


def phi_prime(mode: EigenMode, x, sys: SlabSystem):
    """Analytic derivative of phi; zero at both outer faces."""
    xs = np.asarray(x, dtype=float)
    lb, la = mode.pair.lambda_b, mode.pair.lambda_a
    left = -mode.amp_b * lb * np.sin(lb * (xs + sys.b))
    right = -mode.amp_a * la * np.sin(la * (xs - sys.a))
    out = np.where(xs < 0.0, left, right)
    if np.isscalar(x):
        return float(out)
    return out


def norm_N_closed(sys: SlabSystem, pair: EigenValuePair) -> float:
    """Closed-form squared weighted norm N_n of the interface-normalized mode."""
    mb, ma = sys.mat_b, sys.mat_a
    if pair.n == 0:
        return sys.b * mb.K / mb.kappa + sys.a * ma.K / ma.kappa
    cos_b = math.cos(pair.lambda_b * sys.b)
    cos_a = math.cos(pair.lambda_a * sys.a)
    if abs(cos_b) < DEGENERATE_COS_TOL or abs(cos_a) < DEGENERATE_COS_TOL:
        raise DegenerateInterfaceError(
            f"mode {pair.n}: interface cosine vanishes, closed-form norm undefined"
        )
    return (sys.b * mb.K / (2 * mb.kappa)) / cos_b**2 + (
        sys.a * ma.K / (2 * ma.kappa)
    ) / cos_a**2


def norm_M_closed(sys: SlabSystem, pair: EigenValuePair) -> float:
    """Closed-form squared derivative norm M_n; equals lambda_bar_n * N_n."""
    if pair.n == 0:
        return 0.0
    cos_b = math.cos(pair.lambda_b * sys.b)
    cos_a = math.cos(pair.lambda_a * sys.a)
    if abs(cos_b) < DEGENERATE_COS_TOL or abs(cos_a) < DEGENERATE_COS_TOL:
        raise DegenerateInterfaceError(
            f"mode {pair.n}: interface cosine vanishes, closed-form norm undefined"
        )
    return (sys.b * sys.mat_b.K / 2) * pair.lambda_b**2 / cos_b**2 + (
        sys.a * sys.mat_a.K / 2
    ) * pair.lambda_a**2 / cos_a**2


def _interface_null_vector(sys: SlabSystem, pair: EigenValuePair) -> tuple[float, float]:
    """Unit-norm (theta_b, theta_a) solving the homogeneous interface system."""
    lb, la = pair.lambda_b, pair.lambda_a
    A = np.array(
        [
            [math.cos(lb * sys.b), -math.cos(la * sys.a)],
            [
                sys.mat_b.K * lb * math.sin(lb * sys.b),
                sys.mat_a.K * la * math.sin(la * sys.a),
            ],
        ]
    )
    _, _, vt = np.linalg.svd(A)
    theta = vt[-1]
    # deterministic sign: leading non-negligible component positive
    lead = theta[0] if abs(theta[0]) >= abs(theta[1]) else theta[1]
    if lead < 0:
        theta = -theta
    return float(theta[0]), float(theta[1])


@dataclass(frozen=True)
class EigenBasis:
    """Ordered eigen-elements of one system plus shared quadrature rules."""

    sys: SlabSystem
    modes: tuple[EigenMode, ...]
    quad_x_b: np.ndarray
    quad_w_b: np.ndarray
    quad_x_a: np.ndarray
    quad_w_a: np.ndarray

    def __len__(self) -> int:
        return len(self.modes)

    def lambda_bars(self) -> np.ndarray:
        return np.array([m.pair.lambda_bar for m in self.modes])

    def phi(self, n: int, x):
        return phi(self.modes[n], x, self.sys)

    def phi_prime(self, n: int, x):
        return phi_prime(self.modes[n], x, self.sys)


def slab_matrix(basis: EigenBasis, nodes: np.ndarray, slab: str, mode_count: int) -> np.ndarray:
    """Matrix of phi_{alpha n}(x_j), rows nodes, columns modes 0..mode_count-1."""
    nodes = np.asarray(nodes, dtype=float)
    cols = []
    for mode in basis.modes[:mode_count]:
        if slab == "b":
            cols.append(mode.amp_b * np.cos(mode.pair.lambda_b * (nodes + basis.sys.b)))
        elif slab == "a":
            cols.append(mode.amp_a * np.cos(mode.pair.lambda_a * (nodes - basis.sys.a)))
        else:
            raise ValueError("slab must be 'b' or 'a'")
    return np.column_stack(cols)


def build_basis(
    sys: SlabSystem,
    mode_count: int,
    d0: float = 10.0,
    delta: float = 1e-3,
    scan_step: float = 1e-3,
    refine_tol: float = 1e-12,
) -> EigenBasis:
    """Compute the first mode_count eigen-elements with norms attached."""
    pairs = find_eigenvalues(sys, mode_count - 1, d0, delta, scan_step, refine_tol)
    lam_max = max(p.lambda_b for p in pairs)
    lam_a_max = max(p.lambda_a for p in pairs)
    xb, wb = _leggauss(_quadrature_order(max(lam_max, 1.0), sys.b))
    xa, wa = _leggauss(_quadrature_order(max(lam_a_max, 1.0), sys.a))
    quad_x_b = -sys.b / 2 + (sys.b / 2) * xb
    quad_w_b = (sys.b / 2) * wb
    quad_x_a = sys.a / 2 + (sys.a / 2) * xa
    quad_w_a = (sys.a / 2) * wa

    modes = []
    for pair in pairs:
        cos_b = math.cos(pair.lambda_b * sys.b)
        cos_a = math.cos(pair.lambda_a * sys.a)
        degenerate = pair.n > 0 and (
            abs(cos_b) < DEGENERATE_COS_TOL or abs(cos_a) < DEGENERATE_COS_TOL
        )
        if not degenerate:
            mode = EigenMode(
                pair=pair,
                norm_N=norm_N_closed(sys, pair),
                norm_M=norm_M_closed(sys, pair),
                _b=sys.b,
                _a=sys.a,
            )
        else:
            th_b, th_a = _interface_null_vector(sys, pair)
            fb = th_b * np.cos(pair.lambda_b * (quad_x_b + sys.b))
            fa = th_a * np.cos(pair.lambda_a * (quad_x_a - sys.a))
            gb = -th_b * pair.lambda_b * np.sin(pair.lambda_b * (quad_x_b + sys.b))
            ga = -th_a * pair.lambda_a * np.sin(pair.lambda_a * (quad_x_a - sys.a))
            wN = (sys.mat_b.K / sys.mat_b.kappa) * float(np.dot(quad_w_b, fb**2)) + (
                sys.mat_a.K / sys.mat_a.kappa
            ) * float(np.dot(quad_w_a, fa**2))
            wM = sys.mat_b.K * float(np.dot(quad_w_b, gb**2)) + sys.mat_a.K * float(
                np.dot(quad_w_a, ga**2)
            )
            mode = EigenMode(
                pair=pair,
                norm_N=wN,
                norm_M=wM,
                degenerate_interface=True,
                alt_theta_b=th_b,
                alt_theta_a=th_a,
                _b=sys.b,
                _a=sys.a,
            )
        modes.append(mode)
    return EigenBasis(sys, tuple(modes), quad_x_b, quad_w_b, quad_x_a, quad_w_a)


def weighted_inner(basis: EigenBasis, m: int, n: int) -> float:
    """Weighted inner product of modes m and n (K/kappa weights)."""
    s = basis.sys
    fb_m = slab_matrix(basis, basis.quad_x_b, "b", len(basis))[:, m]
    fb_n = slab_matrix(basis, basis.quad_x_b, "b", len(basis))[:, n]
    fa_m = slab_matrix(basis, basis.quad_x_a, "a", len(basis))[:, m]
    fa_n = slab_matrix(basis, basis.quad_x_a, "a", len(basis))[:, n]
    ib = float(np.dot(basis.quad_w_b, fb_m * fb_n))
    ia = float(np.dot(basis.quad_w_a, fa_m * fa_n))
    return (s.mat_b.K / s.mat_b.kappa) * ib + (s.mat_a.K / s.mat_a.kappa) * ia


def weighted_gram(basis: EigenBasis, mode_count: int | None = None) -> np.ndarray:
    """Full matrix of weighted inner products, diagonal N_n for eigen-modes."""
    s = basis.sys
    count = len(basis) if mode_count is None else mode_count
    Pb = slab_matrix(basis, basis.quad_x_b, "b", count)
    Pa = slab_matrix(basis, basis.quad_x_a, "a", count)
    Gb = Pb.T @ (basis.quad_w_b[:, None] * Pb)
    Ga = Pa.T @ (basis.quad_w_a[:, None] * Pa)
    return (s.mat_b.K / s.mat_b.kappa) * Gb + (s.mat_a.K / s.mat_a.kappa) * Ga


def slab_grams(basis: EigenBasis, mode_count: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-slab (unweighted) Gram matrices of the eigenfunctions."""
    count = len(basis) if mode_count is None else mode_count
    Pb = slab_matrix(basis, basis.quad_x_b, "b", count)
    Pa = slab_matrix(basis, basis.quad_x_a, "a", count)
    return Pb.T @ (basis.quad_w_b[:, None] * Pb), Pa.T @ (basis.quad_w_a[:, None] * Pa)


def derivative_gram(basis: EigenBasis, mode_count: int | None = None) -> np.ndarray:
    """Matrix of K-weighted inner products of derivatives, diagonal M_n."""
    s = basis.sys
    count = len(basis) if mode_count is None else mode_count
    cols_b, cols_a = [], []
    for mode in basis.modes[:count]:
        lb, la = mode.pair.lambda_b, mode.pair.lambda_a
        cols_b.append(-mode.amp_b * lb * np.sin(lb * (basis.quad_x_b + s.b)))
        cols_a.append(-mode.amp_a * la * np.sin(la * (basis.quad_x_a - s.a)))
    Db = np.column_stack(cols_b)
    Da = np.column_stack(cols_a)
    Gb = Db.T @ (basis.quad_w_b[:, None] * Db)
    Ga = Da.T @ (basis.quad_w_a[:, None] * Da)
    return s.mat_b.K * Gb + s.mat_a.K * Ga


def norms_quadrature(basis: EigenBasis, n: int) -> tuple[float, float]:
    """(N_n, M_n) recomputed by quadrature, for cross-checking closed forms."""
    return float(weighted_gram(basis)[n, n]), float(derivative_gram(basis)[n, n])
