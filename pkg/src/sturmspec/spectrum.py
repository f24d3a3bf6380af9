"""Spectrum approximants from trace conditions, half-line truncations, and
the sparse-potential spectral checks.

The level-k approximant is the set {E : |h_k(E)| <= 2}; its bands are
located on an energy grid and the endpoints refined by bisection of
|h_k| - 2.  Half-line operators are truncated to symmetric tridiagonal
matrices whose eigenvalues come from Sturm-count bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .sequences import SparseSpec, ToeplitzSpec, ValidationError, Window
from .cocycle import matrix_norm2, trace_recursion_f64

__all__ = [
    "BandSet",
    "band_set_from_trace",
    "sigma_n",
    "band_approximant",
    "grid_containment",
    "sparse_essential_spectrum",
    "HalfLineOperator",
    "halfline_eigs",
    "free_halfline_eigs",
    "CertificateReport",
    "free_power_norm_bound",
    "sampled_power_sup",
    "barrier_matrix_norm",
    "no_eigenvalue_series",
    "sparse_no_eigenvalue_certificate",
]


# ---------------------------------------------------------------------------
# Band sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BandSet:
    """Disjoint closed energy intervals where a trace condition holds.

    ``level`` records which trace produced the set (a tuple for merged
    sets); zero-width intervals mark tangencies of |h| with 2 that were
    detected but do not contribute measure.
    """

    intervals: tuple
    level: object
    refinement_tol: float

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        for a, b in ivs:
            if b < a:
                raise ValidationError("interval endpoints out of order")
        for (_, b), (a2, _) in zip(ivs, ivs[1:]):
            if a2 <= b:
                raise ValidationError("intervals must be disjoint and sorted")
        object.__setattr__(self, "intervals", ivs)

    @property
    def measure(self) -> float:
        return sum(b - a for a, b in self.intervals)

    def __len__(self):
        return len(self.intervals)

    def contains(self, e: float, slack: float = 0.0) -> bool:
        for a, b in self.intervals:
            if a - slack <= e <= b + slack:
                return True
        return False

    def union(self, other: "BandSet") -> "BandSet":
        merged = sorted(list(self.intervals) + list(other.intervals))
        out = []
        for a, b in merged:
            if out and a <= out[-1][1]:
                out[-1][1] = max(out[-1][1], b)
            else:
                out.append([a, b])
        return BandSet(
            intervals=tuple((a, b) for a, b in out),
            level=(self.level, other.level),
            refinement_tol=max(self.refinement_tol, other.refinement_tol),
        )

    def sample_energies(self, per_band: int = 1) -> list:
        """Interior sample points, band midpoints first."""
        out = []
        for a, b in self.intervals:
            if b == a:
                out.append(a)
                continue
            for i in range(per_band):
                out.append(a + (b - a) * (i + 1) / (per_band + 1))
        return out

    def as_dict(self):
        return {
            "level": self.level,
            "tol": self.refinement_tol,
            "measure": self.measure,
            "intervals": [[a, b] for a, b in self.intervals],
        }


def _bisect_edge(g: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Root of g between lo (g>0) and hi (g<0), to |g| <= 10*tol at the result."""
    glo, ghi = g(lo), g(hi)
    if glo < 0 or ghi > 0:
        # grid bracketing was approximate; fall back to the closer endpoint
        return lo if abs(glo) < abs(ghi) else hi
    x = 0.5 * (lo + hi)
    for _ in range(200):
        x = 0.5 * (lo + hi)
        gx = g(x)
        if abs(gx) <= 10.0 * tol:
            return x
        if gx > 0:
            lo = x
        else:
            hi = x
        if abs(hi - lo) <= max(abs(x), 1.0) * 1e-17:
            break
    return x


def band_set_from_trace(
    trace_fn: Callable[[np.ndarray], np.ndarray],
    e_range,
    grid: int,
    tol: float,
    level: object = None,
) -> BandSet:
    """Locate {E : |h(E)| <= 2} by grid scan plus endpoint bisection.

    Bands narrower than the grid step can be missed; isolated tangencies
    are picked up by refining interior local minima of |h| - 2 that come
    close to zero from above.
    """
    if grid < 1000:
        raise ValidationError("grid must use at least 1000 points")
    lo, hi = float(e_range[0]), float(e_range[1])
    es = np.linspace(lo, hi, grid)
    h = np.asarray(trace_fn(es), dtype=np.float64)
    g = np.abs(h) - 2.0

    def g_scalar(x):
        return abs(float(trace_fn(np.array([x]))[0])) - 2.0

    inside = g <= 0.0
    intervals = []
    i = 0
    while i < grid:
        if not inside[i]:
            i += 1
            continue
        j = i
        while j + 1 < grid and inside[j + 1]:
            j += 1
        left = es[i] if i == 0 else _bisect_edge(g_scalar, es[i - 1], es[i], tol)
        right = es[j] if j == grid - 1 else _bisect_edge(
            lambda x: g_scalar(x), es[j + 1], es[j], tol
        )
        intervals.append((left, right))
        i = j + 1

    # tangency pass: strict local minima of g above zero but within reach
    step = (hi - lo) / (grid - 1)
    interior = np.flatnonzero(
        (g[1:-1] > 0)
        & (g[1:-1] <= g[:-2])
        & (g[1:-1] <= g[2:])
        & (g[1:-1] < 4.0 * step * np.maximum(np.abs(h[1:-1]), 1.0))
    )
    for idx in interior + 1:
        a, b = es[idx - 1], es[idx + 1]
        for _ in range(120):
            m1 = a + (b - a) / 3
            m2 = b - (b - a) / 3
            if g_scalar(m1) <= g_scalar(m2):
                b = m2
            else:
                a = m1
            if b - a < tol:
                break
        x = 0.5 * (a + b)
        if abs(g_scalar(x)) <= 10.0 * tol:
            intervals.append((x, x))

    intervals.sort()
    merged = []
    for a, b in intervals:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return BandSet(
        intervals=tuple((a, b) for a, b in merged),
        level=level,
        refinement_tol=tol,
    )


def _default_e_range(spec: ToeplitzSpec):
    vals = spec.coupling_values()
    return (min(vals) - 2.5, max(vals) + 2.5)


def sigma_n(
    spec: ToeplitzSpec,
    k: int,
    e_range=None,
    grid: int = 100_000,
    tol: float = 1e-10,
) -> BandSet:
    """The level-k trace band set {E : |h_k(E)| <= 2}."""
    if k < 0:
        raise ValidationError("level must be >= 0")
    if spec.max_level() < k + 1:
        raise ValidationError("level %d beyond the declared tail" % k)
    if e_range is None:
        e_range = _default_e_range(spec)
    vals = spec.coupling_values()
    if e_range[0] > min(vals) - 2 or e_range[1] < max(vals) + 2:
        raise ValidationError(
            "e_range must cover the spectral hull [%g, %g]"
            % (min(vals) - 2, max(vals) + 2)
        )
    kk = max(k, 2)

    def fn(es):
        return trace_recursion_f64(spec, kk, es)[k]

    return band_set_from_trace(fn, e_range, grid, tol, level=k)


def band_approximant(
    spec: ToeplitzSpec,
    k: int,
    e_range=None,
    grid: int = 100_000,
    tol: float = 1e-10,
) -> BandSet:
    """Union of the level-k and level-(k+1) band sets.

    Nested intersections of these unions squeeze down on the spectrum;
    at any finite level the union is an outer approximation.
    """
    a = sigma_n(spec, k, e_range=e_range, grid=grid, tol=tol)
    b = sigma_n(spec, k + 1, e_range=e_range, grid=grid, tol=tol)
    return a.union(b)


def grid_containment(
    inner: BandSet, outer: BandSet, e_range, grid: int
) -> tuple:
    """(violations, checked): grid points of `inner` missing from `outer`.

    The slack is one grid step, matching the resolution of the scan that
    produced the sets.
    """
    es = np.linspace(float(e_range[0]), float(e_range[1]), grid)
    step = (es[-1] - es[0]) / (grid - 1)
    checked = 0
    violations = []
    for e in es:
        if inner.contains(float(e)):
            checked += 1
            if not outer.contains(float(e), slack=step):
                violations.append(float(e))
    return violations, checked


# ---------------------------------------------------------------------------
# Sparse potentials: essential spectrum and half-line truncations
# ---------------------------------------------------------------------------


def sparse_essential_spectrum(spec: SparseSpec):
    """([-2, 2], sgn(v) * sqrt(4 + v^2)) for the sparse barrier potential."""
    v = spec.v
    point = math.copysign(math.sqrt(4.0 + v * v), v)
    return ((-2.0, 2.0), point)


@dataclass(frozen=True)
class HalfLineOperator:
    """Truncated half-line operator with boundary angle phi.

    The boundary condition psi(0) sin(phi) + psi(1) cos(phi) = 0 removes
    site 0 and shifts the first diagonal entry by -cot(phi); phi = pi/2 is
    the Dirichlet case.  The potential window must cover sites 1..size.
    """

    size: int
    potential: Window
    boundary_phi: float = math.pi / 2

    def __post_init__(self):
        if self.size < 64:
            raise ValidationError("truncation size must be >= 64")
        if self.potential.start > 1 or self.potential.end < self.size + 1:
            raise ValidationError("potential window must cover sites 1..size")
        if abs(math.sin(self.boundary_phi)) < 1e-12:
            raise ValidationError(
                "sin(phi) = 0 pins psi(1) = 0; choose phi in (0, pi)"
            )

    def diagonal(self) -> np.ndarray:
        vals = self.potential.values()
        i0 = 1 - self.potential.start
        d = vals[i0 : i0 + self.size].astype(np.float64).copy()
        d[0] -= math.cos(self.boundary_phi) / math.sin(self.boundary_phi)
        return d


def _sturm_counts(d: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Number of eigenvalues of tridiag(d, offdiag=1) below each x.

    Standard Sturm-sequence pivot count; vanishing pivots are nudged
    negative before counting (an exact hit counts as below), which keeps
    the count monotone in x up to the isolated hit itself.
    """
    pivmin = 1e-30
    count = np.zeros(np.shape(x), dtype=np.int64)
    q = np.ones_like(x)
    for i in range(d.size):
        q = (d[i] - x) - (1.0 / q if i > 0 else 0.0)
        q = np.where(np.abs(q) < pivmin, -pivmin, q)
        count += q < 0
    return count


def halfline_eigs(op: HalfLineOperator, count: Optional[int] = None) -> list:
    """Eigenvalues of the truncated operator by Sturm-count bisection.

    Returns the ``count`` largest (all of them when count is None),
    sorted ascending.  Off-diagonal entries are all 1, so the counts
    need no squaring of couplings.
    """
    d = op.diagonal()
    n = d.size
    count = n if count is None else min(int(count), n)
    if count < 1:
        raise ValidationError("count must be >= 1")
    lo = float(d.min() - 2.0)
    hi = float(d.max() + 2.0)
    targets = np.arange(n - count, n)  # eigenvalue indices, ascending
    los = np.full(count, lo)
    his = np.full(count, hi)
    for _ in range(80):
        mids = 0.5 * (los + his)
        c = _sturm_counts(d, mids)
        below = c <= targets  # true eigenvalue index >= target: go right
        los = np.where(below, mids, los)
        his = np.where(below, his, mids)
        if np.max(his - los) < 1e-14 * max(abs(lo), abs(hi), 1.0):
            break
    return [float(x) for x in 0.5 * (los + his)]


def free_halfline_eigs(n: int) -> np.ndarray:
    """Dirichlet eigenvalues of the zero potential: 2 cos(pi j / (n+1))."""
    j = np.arange(1, n + 1)
    return np.sort(2.0 * np.cos(math.pi * j / (n + 1)))


# ---------------------------------------------------------------------------
# Non-eigenvalue certificates for sparse potentials
# ---------------------------------------------------------------------------


def free_power_norm_bound(energy: float) -> float:
    """sup_j ||F^j|| for the free site matrix F at |E| < 2, in closed form.

    F is conjugate to a rotation; the sup over a dense rotation orbit is
    the condition number of the conjugating matrix,
    sqrt((2 + |E|) / (2 - |E|)).  At energies where the rotation angle is
    a rational multiple of pi the finite orbit can fall short of this
    value, so it is an upper bound there (and exact at E = 0).
    """
    a = abs(energy)
    if a >= 2.0:
        raise ValidationError("|E| >= 2: free powers are unbounded")
    return math.sqrt((2.0 + a) / (2.0 - a))


def sampled_power_sup(energy: float, j_max: int = 10_000) -> float:
    """max_{j <= j_max} ||F^j|| by literal iteration."""
    if abs(energy) >= 2.0:
        raise ValidationError("|E| >= 2: free powers are unbounded")
    f = np.array([[energy, -1.0], [1.0, 0.0]])
    m = np.eye(2)
    best = 1.0
    for _ in range(j_max):
        m = f @ m
        best = max(best, matrix_norm2(m))
    return best


def barrier_matrix_norm(energy: float, v: float) -> float:
    """||[[E - v, -1], [1, 0]]||, the single-barrier factor."""
    return matrix_norm2(np.array([[energy - v, -1.0], [1.0, 0.0]]))


def no_eigenvalue_series(gaps: Sequence[int], v: float, energy: float):
    """Terms (n_{k+1} - n_k) / (C_E O_{E,v})^(2k) of the exclusion series."""
    c = free_power_norm_bound(energy)
    o = barrier_matrix_norm(energy, v)
    co2 = (c * o) ** 2
    return [g / co2**k for k, g in enumerate(gaps, start=1)]


@dataclass(frozen=True)
class CertificateReport:
    """Divergence evidence for the eigenvalue-exclusion series.

    verdict is "diverges-evidence" when the series terms stop decaying
    (their sum then grows without bound and the energy cannot be an
    eigenvalue for any boundary condition), "converges-evidence" when
    they decay geometrically, else "inconclusive".
    """

    energy: float
    v: float
    c_closed: float
    c_sampled: float
    o_norm: float
    terms: tuple
    partial_sums: tuple
    verdict: str

    @property
    def positive(self) -> bool:
        return self.verdict == "diverges-evidence"

    def as_dict(self):
        return {
            "energy": self.energy,
            "v": self.v,
            "C_E_closed": self.c_closed,
            "C_E_sampled": self.c_sampled,
            "O_Ev": self.o_norm,
            "terms": list(self.terms),
            "partial_sums": list(self.partial_sums),
            "verdict": self.verdict,
        }


def certificate_from_gaps(
    gaps: Sequence[int], v: float, energy: float, sample_powers: int = 10_000
) -> CertificateReport:
    terms = no_eigenvalue_series(gaps, v, energy)
    sums = list(np.cumsum(terms))
    tail = terms[-6:] if len(terms) >= 6 else terms
    ratios = [b / a for a, b in zip(tail, tail[1:]) if a > 0]
    if ratios and min(ratios) >= 0.999:
        verdict = "diverges-evidence"
    elif ratios and max(ratios) <= 0.95:
        verdict = "converges-evidence"
    else:
        verdict = "inconclusive"
    return CertificateReport(
        energy=float(energy),
        v=float(v),
        c_closed=free_power_norm_bound(energy),
        c_sampled=sampled_power_sup(energy, sample_powers),
        o_norm=barrier_matrix_norm(energy, v),
        terms=tuple(terms),
        partial_sums=tuple(float(s) for s in sums),
        verdict=verdict,
    )


def sparse_no_eigenvalue_certificate(
    spec: SparseSpec, energy: float, k_max: int = 15, sample_powers: int = 10_000
) -> CertificateReport:
    """Eigenvalue-exclusion check at an energy inside (-2, 2).

    Computes the free-power bound C_E, the barrier norm O_{E,v}, and the
    partial sums of sum_k gap_k / (C_E O_{E,v})^(2k); growing partial
    sums certify that the energy is not an eigenvalue for any boundary
    condition.
    """
    if abs(energy) >= 2.0:
        raise ValidationError(
            "certificate requires |E| < 2 (free powers unbounded otherwise)"
        )
    gaps = spec.gaps(k_max)
    return certificate_from_gaps(gaps, spec.v, energy, sample_powers=sample_powers)
