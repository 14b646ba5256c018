"""Eigenvalue computation for the two-slab Sturm-Liouville problem.

Separation of variables with insulated outer faces and perfect contact
at the interface reduces the spatial problem to one transcendental
equation in the left-slab frequency lambda_b:

    (K_b/sqrt(kappa_b)) sin(lambda_b b) cos(lambda_a a)
      + (K_a/sqrt(kappa_a)) sin(lambda_a a) cos(lambda_b b) = 0,

with lambda_a = sqrt(kappa_b/kappa_a) * lambda_b pinned by the shared
decay rate lambda_bar = kappa_b lambda_b^2 = kappa_a lambda_a^2.

Roots are located by a uniform sign-change scan followed by bisection;
the scan window grows in fixed increments until enough roots are found.
A Newton multistart on the equivalent two-variable system is kept as a
demonstration of why the scan is preferred: naive multistarts drop and
duplicate roots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import NumericalError, SlabSystem

# Grid values this close to zero are treated as exact roots, and local
# minima of |f| below it are flagged as tangency (double) roots.
TANGENCY_TOL = 1e-12

# Hard cap on window expansions; past this the spectrum is assumed broken.
MAX_EXPANSIONS = 10**6


def lambda_a_of(lambda_b: float, sys: SlabSystem) -> float:
    """Right-slab frequency paired with lambda_b via the shared decay rate."""
    return sys.kappa_ratio_root() * lambda_b


def eigen_f(lambda_b, sys: SlabSystem):
    """Transcendental eigenvalue function; vectorized over lambda_b."""
    lam_b = np.asarray(lambda_b, dtype=float)
    lam_a = sys.kappa_ratio_root() * lam_b
    cb = sys.mat_b.K / math.sqrt(sys.mat_b.kappa)
    ca = sys.mat_a.K / math.sqrt(sys.mat_a.kappa)
    out = cb * np.sin(lam_b * sys.b) * np.cos(lam_a * sys.a) + ca * np.sin(
        lam_a * sys.a
    ) * np.cos(lam_b * sys.b)
    if np.isscalar(lambda_b):
        return float(out)
    return out


@dataclass(frozen=True)
class EigenValuePair:
    """One eigen-element's frequencies and decay rate, index n >= 0."""

    n: int
    lambda_b: float
    lambda_a: float
    lambda_bar: float


def _bisect(f, lo: float, hi: float, flo: float, fhi: float, tol: float) -> float:
    """Standard bisection on a bracketing interval, to width <= tol."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if flo * fmid < 0.0:
            hi, fhi = mid, fmid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def scan_roots(
    f,
    lo: float,
    hi: float,
    scan_step: float,
    refine_tol: float,
    max_roots: int | None = None,
) -> list[float]:
    """Roots of f on [lo, hi] by uniform scan + bisection.

    f must be vectorized.  Grid points where f vanishes to TANGENCY_TOL
    are accepted directly, which also catches tangency (no-sign-change)
    roots as local minima of |f|; everything else needs a sign change.
    """
    n_steps = int(math.ceil((hi - lo) / scan_step))
    if n_steps < 1:
        return []
    xs = lo + scan_step * np.arange(n_steps + 1)
    xs[-1] = min(xs[-1], hi)
    fs = np.asarray(f(xs), dtype=float)

    roots: list[float] = []
    zeroish = np.abs(fs) <= TANGENCY_TOL
    i = 0
    while i < len(xs) - 1:
        if max_roots is not None and len(roots) >= max_roots:
            return roots
        if zeroish[i]:
            # exact grid hit (always true at lambda = 0) or tangency minimum
            if not roots or xs[i] - roots[-1] > scan_step / 2:
                roots.append(float(xs[i]))
            i += 1
            continue
        if not zeroish[i + 1] and fs[i] * fs[i + 1] < 0.0:
            roots.append(_bisect(lambda x: float(f(x)), xs[i], xs[i + 1], fs[i], fs[i + 1], refine_tol))
        i += 1
    if zeroish[-1] and (not roots or xs[-1] - roots[-1] > scan_step / 2):
        roots.append(float(xs[-1]))
    if max_roots is not None:
        roots = roots[:max_roots]
    return roots


def find_eigenvalues(
    sys: SlabSystem,
    N: int,
    d0: float = 10.0,
    delta: float = 1e-3,
    scan_step: float = 1e-3,
    refine_tol: float = 1e-12,
) -> list[EigenValuePair]:
    """Smallest N+1 non-negative eigen frequencies, ascending.

    Index 0 is always lambda_b = 0 (the constant mode).  The scan window
    [0, d] starts at d0 and is expanded by delta until N+1 roots are
    found, up to d0 + 1e6*delta.
    """
    if N < 0:
        raise NumericalError("N must be non-negative")
    f = lambda x: eigen_f(x, sys)
    needed = N + 1
    d = d0
    roots = scan_roots(f, 0.0, d, scan_step, refine_tol, max_roots=needed)
    expansions = 0
    while len(roots) < needed:
        if expansions >= MAX_EXPANSIONS:
            raise NumericalError(
                f"eigenvalue scan exceeded expansion cap at d = {d!r} "
                f"with {len(roots)} of {needed} roots"
            )
        # Grow in delta units but scan chunk-wise so the grid (anchored at
        # 0 with pitch scan_step) is identical to a one-shot scan of [0, d].
        grow = max(1, min(MAX_EXPANSIONS - expansions, int(math.ceil(1000 * scan_step / delta))))
        new_d = d + grow * delta
        lo_idx = int(math.floor(d / scan_step))
        more = scan_roots(
            lambda x: f(x),
            lo_idx * scan_step,
            new_d,
            scan_step,
            refine_tol,
            max_roots=None,
        )
        for r in more:
            if not roots or r > roots[-1] + scan_step / 2:
                roots.append(r)
        expansions += grow
        d = new_d

    roots = roots[:needed]
    ratio = sys.kappa_ratio_root()
    pairs = []
    for n, lam_b in enumerate(roots):
        if n == 0:
            lam_b = 0.0
        lam_a = ratio * lam_b
        pairs.append(EigenValuePair(n, lam_b, lam_a, sys.mat_b.kappa * lam_b**2))
    return pairs


@dataclass(frozen=True)
class NewtonDemoReport:
    """Outcome of the Newton multistart: what survived, what collapsed."""

    roots_found: tuple[float, ...]
    distinct_count: int
    missed: bool


def newton_demo(
    sys: SlabSystem,
    guesses: np.ndarray,
    iters: int = 50,
    stop_delta: float = 1e-10,
) -> NewtonDemoReport:
    """Damped Newton on the two-variable system, one run per guess pair.

    ``guesses`` holds (lambda_b, lambda_a) start pairs, shape (m, 2) or a
    flat length-2m array.  The system couples the shared-decay constraint
    kappa_b l_b^2 = kappa_a l_a^2 with the unreduced interface equation.
    Converged end points closer than sqrt(stop_delta) are merged, which
    is exactly how multistarts silently lose eigenvalues.
    """
    pts = np.asarray(guesses, dtype=float).reshape(-1, 2)
    kb, ka = sys.mat_b.kappa, sys.mat_a.kappa
    cb = sys.mat_b.K / math.sqrt(kb)
    ca = sys.mat_a.K / math.sqrt(ka)
    b, a = sys.b, sys.a

    def G(v):
        lb, la = v
        return np.array(
            [
                kb * lb * lb - ka * la * la,
                cb * math.sin(lb * b) * math.cos(la * a)
                + ca * math.sin(la * a) * math.cos(lb * b),
            ]
        )

    def J(v):
        lb, la = v
        return np.array(
            [
                [2 * kb * lb, -2 * ka * la],
                [
                    cb * b * math.cos(lb * b) * math.cos(la * a)
                    - ca * b * math.sin(la * a) * math.sin(lb * b),
                    -cb * a * math.sin(lb * b) * math.sin(la * a)
                    + ca * a * math.cos(la * a) * math.cos(lb * b),
                ],
            ]
        )

    found: list[float] = []
    diverged = 0
    for start in pts:
        v = start.copy()
        ok = False
        for _ in range(iters):
            g = G(v)
            try:
                step = np.linalg.solve(J(v), -g)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(J(v), -g, rcond=None)[0]
            # damp: halve until the residual stops growing
            t = 1.0
            g0 = float(np.linalg.norm(g))
            for _ in range(25):
                trial = v + t * step
                if float(np.linalg.norm(G(trial))) <= g0 or t < 1e-12:
                    break
                t *= 0.5
            v = v + t * step
            if not np.all(np.isfinite(v)):
                break
            if float(np.linalg.norm(t * step)) < stop_delta:
                ok = True
                break
        if ok and np.all(np.isfinite(v)):
            found.append(float(v[0]))
        else:
            diverged += 1

    merge_tol = math.sqrt(stop_delta)
    distinct: list[float] = []
    for r in sorted(found):
        if not distinct or abs(r - distinct[-1]) > merge_tol:
            distinct.append(r)
    return NewtonDemoReport(
        roots_found=tuple(found),
        distinct_count=len(distinct),
        missed=(len(distinct) < len(pts)) or diverged > 0,
    )
