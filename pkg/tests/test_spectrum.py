"""Band sets, half-line truncations, sparse spectral checks."""

import math

import numpy as np
import pytest
import scipy.linalg as sla

from sturmspec import cocycle as cc
from sturmspec import sequences as sq
from sturmspec import spectrum as sp

AB = sq.Alphabet(("a", "b"), (0.0, 1.0))


def simple_spec(periods=(3, 3), **kw):
    n = len(periods)
    return sq.ToeplitzSpec(
        AB, sq.CodingTriple((), 1, 0),
        tuple("ab"[i % 2] for i in range(n)), tuple(periods), (0,) * n, **kw
    )


def zero_window(length):
    return sq.SparseSpec(v=1.0, positions=(10**9,)).window(1, length)


# ---------------------------------------------------------------------------
# Band sets from traces
# ---------------------------------------------------------------------------


def test_free_laplacian_band_for_any_power():
    # trace of the m-step free product stays in [-2, 2] exactly on [-2, 2]
    for m in (1, 4, 9):

        def fn(es, m=m):
            return np.array([np.trace(cc.word_matrix([0.0] * m, e)) for e in es])

        band = sp.band_set_from_trace(fn, (-3.0, 3.0), 4001, 1e-10, level=m)
        assert len(band) >= 1
        assert abs(band.intervals[0][0] + 2.0) < 1e-8
        assert abs(band.intervals[-1][1] - 2.0) < 1e-8
        assert abs(band.measure - 4.0) < 1e-7


def test_sigma_endpoints_satisfy_trace_condition():
    spec = simple_spec()
    band = sp.sigma_n(spec, 4, grid=20_000, tol=1e-10)
    worst = max(
        abs(abs(cc.trace_at(spec, 4, e)) - 2.0)
        for iv in band.intervals
        for e in iv
    )
    assert worst <= 1e-9


def test_sigma_validation():
    spec = simple_spec()
    with pytest.raises(sq.ValidationError):
        sp.sigma_n(spec, 2, grid=500)
    with pytest.raises(sq.ValidationError):
        sp.sigma_n(spec, 2, e_range=(-1.0, 4.0))  # misses the hull
    shallow = simple_spec(periods=(3, 3, 3), cycle=False)
    with pytest.raises(sq.ValidationError):
        sp.sigma_n(shallow, 5)


def test_large_energy_is_outside_every_level():
    spec = simple_spec()
    for k in range(5):
        band = sp.sigma_n(spec, k, e_range=(-4.5, 10.5), grid=20_000)
        assert not band.contains(10.0)
        assert band.intervals[-1][1] <= 3.0 + 1e-6  # norm bound: max V + 2


def test_band_measures_shrink():
    spec = simple_spec()
    a0 = sp.band_approximant(spec, 0, grid=20_000)
    a2 = sp.band_approximant(spec, 2, grid=20_000)
    assert a2.measure < a0.measure


def test_containment_of_deeper_levels():
    spec = simple_spec()
    outer = sp.band_approximant(spec, 2, grid=20_000)
    inner = sp.sigma_n(spec, 5, grid=20_000)
    viol, checked = sp.grid_containment(inner, outer, (-2.5, 3.5), 20_000)
    assert checked > 1000
    assert not viol


def test_union_merges_overlaps():
    a = sp.BandSet(((0.0, 1.0), (2.0, 3.0)), level=0, refinement_tol=1e-10)
    b = sp.BandSet(((0.5, 2.5),), level=1, refinement_tol=1e-10)
    u = a.union(b)
    assert u.intervals == ((0.0, 3.0),)
    assert abs(u.measure - 3.0) < 1e-15


def test_bandset_validation():
    with pytest.raises(sq.ValidationError):
        sp.BandSet(((0.0, 1.0), (0.5, 2.0)), level=0, refinement_tol=1e-10)
    with pytest.raises(sq.ValidationError):
        sp.BandSet(((1.0, 0.0),), level=0, refinement_tol=1e-10)


# ---------------------------------------------------------------------------
# Sparse essential spectrum and truncations
# ---------------------------------------------------------------------------


def test_essential_spectrum_formula():
    band, point = sp.sparse_essential_spectrum(sq.SparseSpec(v=2.0, rule=("power", 3)))
    assert band == (-2.0, 2.0)
    assert abs(point - math.sqrt(8.0)) < 1e-12
    _, neg = sp.sparse_essential_spectrum(sq.SparseSpec(v=-2.0, rule=("power", 3)))
    assert abs(neg + math.sqrt(8.0)) < 1e-12
    _, near = sp.sparse_essential_spectrum(
        sq.SparseSpec(v=1e-6, positions=(1, 3, 7, 15))
    )
    assert 2.0 < near < 2.0 + 1e-12  # continuous into the band edge


def test_halfline_free_spectrum_closed_form():
    op = sp.HalfLineOperator(512, zero_window(600))
    eigs = np.array(sp.halfline_eigs(op))
    ref = sp.free_halfline_eigs(512)
    assert np.abs(eigs - ref).max() <= 1e-10


def test_halfline_matches_scipy_on_random_potential():
    rng = np.random.default_rng(0)
    vals = rng.uniform(-1, 1, 128)
    alpha = sq.Alphabet(tuple("s%d" % i for i in range(128)), tuple(vals))
    w = sq.Window(1, np.arange(128, dtype=np.int16), alpha)
    for phi in (math.pi / 2, 1.0, 2.2):
        op = sp.HalfLineOperator(128, w, boundary_phi=phi)
        mine = np.array(sp.halfline_eigs(op))
        ref = np.sort(
            sla.eigh_tridiagonal(op.diagonal(), np.ones(127), eigvals_only=True)
        )
        assert np.abs(mine - ref).max() <= 1e-11


def test_halfline_gershgorin_bound():
    spec = sq.SparseSpec(v=2.0, rule=("power", 3))
    op = sp.HalfLineOperator(256, spec.window(1, 300))
    eigs = sp.halfline_eigs(op)
    assert max(eigs) <= 2.0 + 2.0 + 1e-12


def test_halfline_count_selects_largest():
    op = sp.HalfLineOperator(128, zero_window(200))
    top = sp.halfline_eigs(op, count=5)
    full = sp.halfline_eigs(op)
    assert np.allclose(top, full[-5:])


def test_halfline_validation():
    with pytest.raises(sq.ValidationError):
        sp.HalfLineOperator(32, zero_window(64))
    with pytest.raises(sq.ValidationError):
        sp.HalfLineOperator(64, zero_window(80), boundary_phi=0.0)
    with pytest.raises(sq.ValidationError):
        sp.HalfLineOperator(128, zero_window(100))  # window too short


# ---------------------------------------------------------------------------
# Eigenvalue-exclusion certificates
# ---------------------------------------------------------------------------


def test_free_power_bound_at_zero_energy():
    assert sp.free_power_norm_bound(0.0) == 1.0
    assert abs(sp.sampled_power_sup(0.0, 2000) - 1.0) <= 1e-12


def test_free_power_bound_generic_energies():
    for e in (0.7, -0.4, 1.1):
        closed = sp.free_power_norm_bound(e)
        sampled = sp.sampled_power_sup(e, 10_000)
        assert sampled <= closed + 1e-12
        assert abs(sampled - closed) <= 1e-6


def test_certificate_requires_interior_energy():
    spec = sq.SparseSpec(v=2.0, rule=("power", 3))
    with pytest.raises(sq.ValidationError):
        sp.sparse_no_eigenvalue_certificate(spec, 2.0)
    with pytest.raises(sq.ValidationError):
        sp.free_power_norm_bound(-2.5)


def test_certificate_diverges_for_factorial_gaps():
    spec = sq.SparseSpec(v=2.0, rule=("factorial_gaps", 1))
    cert = sp.sparse_no_eigenvalue_certificate(spec, 0.0, k_max=15)
    assert cert.positive
    assert cert.partial_sums[-1] > 2 * cert.partial_sums[7]
    assert cert.terms[-1] > cert.terms[-2] > cert.terms[-3]


def test_certificate_converges_for_geometric_gaps_with_large_barrier():
    gaps = [2**k for k in range(1, 16)]
    cert = sp.certificate_from_gaps(gaps, 8.0, 0.0)
    assert (cert.c_closed * cert.o_norm) ** 2 > 2.0
    assert cert.verdict == "converges-evidence"
    assert not cert.positive


def test_certificate_geometric_threshold():
    # at E = 0, v = 2: (C O)^2 = 3 + 2 sqrt(2) ~ 5.83, so gap ratio 3
    # converges while gap ratio 7 diverges
    slow = sp.sparse_no_eigenvalue_certificate(
        sq.SparseSpec(v=2.0, rule=("power", 3)), 0.0, k_max=15
    )
    assert slow.verdict == "converges-evidence"
    fast = sp.sparse_no_eigenvalue_certificate(
        sq.SparseSpec(v=2.0, rule=("power", 7)), 0.0, k_max=15
    )
    assert fast.verdict == "diverges-evidence"
