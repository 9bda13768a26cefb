"""Measures, summaries, the three convolutions, density utilities."""

import numpy as np
import pytest

import spinmix as sm
from spinmix.spectra import EmpiricalMeasure, freedman_diaconis_edges

from conftest import wishart_chain


# ---------------------------------------------------------------------------
# summaries


def test_summarize_point_mass():
    s = sm.summarize(EmpiricalMeasure([5.0], [1.0]))
    assert s.mu == 5.0 and s.sigma2 == 0.0
    assert s.gamma1 is None and s.gamma2 is None


def test_summarize_gaussian_kurtosis():
    x = sm.Rng(41).generator().standard_normal(1_000_000)
    s = sm.summarize(EmpiricalMeasure.from_samples(x))
    assert abs(s.gamma2) < 0.01
    assert abs(s.gamma1) < 0.01


def test_summary_internal_consistency():
    gen = sm.Rng(42).generator()
    v, w = gen.standard_normal(500) * 3 + 1, gen.random(500)
    m = EmpiricalMeasure(v, w)
    s = sm.summarize(m)
    mu = s.mu
    c2 = ((m.values - mu) ** 2) @ m.weights
    c4 = ((m.values - mu) ** 4) @ m.weights
    assert abs(s.gamma2 - (c4 / c2 ** 2 - 3.0)) < 1e-12
    assert abs(s.sigma2 - c2) < 1e-12 * max(1.0, c2)
    assert s.kappa2 >= 0


def test_summary_weighted_equals_repeated():
    v = np.array([1.0, 2.0, 4.0])
    w = np.array([0.25, 0.5, 0.25])
    s1 = sm.summarize(EmpiricalMeasure(v, w))
    s2 = sm.summarize(EmpiricalMeasure.from_samples([1.0, 2.0, 2.0, 4.0]))
    assert abs(s1.m4 - s2.m4) < 1e-12


# ---------------------------------------------------------------------------
# classical convolution


def test_classical_exact_cross_binary():
    u = EmpiricalMeasure([0.0, 1.0], [0.5, 0.5])
    out = sm.classical_convolve(u, u, mode="exact_cross")
    assert np.array_equal(out.values, [0.0, 1.0, 2.0])
    assert np.abs(out.weights - [0.25, 0.5, 0.25]).max() < 1e-15


def test_classical_exact_cross_mean_additivity():
    gen = sm.Rng(43).generator()
    a = EmpiricalMeasure(gen.standard_normal(40), gen.random(40))
    b = EmpiricalMeasure(gen.standard_normal(25) + 2, gen.random(25))
    out = sm.classical_convolve(a, b, mode="exact_cross")
    assert abs(out.mean() - (a.mean() + b.mean())) < 1e-12


def test_classical_mc_matches_exact():
    gen = sm.Rng(44).generator()
    a = EmpiricalMeasure.from_samples(gen.standard_normal(32))
    b = EmpiricalMeasure.from_samples(gen.standard_normal(32) * 2)
    exact = sm.classical_convolve(a, b, mode="exact_cross")
    mc = sm.classical_convolve(a, b, mode="mc", trials=4000, rng=sm.Rng(45))
    se = np.sqrt(exact.variance() / mc.values.size)
    assert abs(mc.mean() - exact.mean()) <= 4 * se
    assert sm.ks_distance(mc, exact) < 0.02


def test_classical_mode_validation():
    big = EmpiricalMeasure.from_samples(np.arange(4000.0))
    with pytest.raises(ValueError, match="support too large"):
        sm.classical_convolve(big, big, mode="exact_cross")
    uneven = EmpiricalMeasure([0.0, 1.0], [0.9, 0.1])
    with pytest.raises(ValueError, match="uniformly"):
        sm.classical_convolve(uneven, uneven, mode="mc", trials=2, rng=sm.Rng(0))


# ---------------------------------------------------------------------------
# isotropic convolution


def test_isotropic_zero_b_returns_a():
    a = np.array([-1.0, 0.5, 2.0, 7.0])
    out = sm.isotropic_convolve(a, np.zeros(4), 1, trials=20, rng=sm.Rng(46))
    rows = out.values.reshape(20, 4)  # sorted pool == repeated sorted a
    assert np.abs(np.sort(a) - np.unique(np.round(rows, 8))).max() < 1e-8


def test_isotropic_scaling_linearity():
    a = np.array([0.0, 1.0, 3.0, -2.0])
    b = np.array([1.0, 1.0, -1.0, 0.5])
    base = sm.isotropic_convolve(a, b, 1, trials=50, rng=sm.Rng(47))
    scaled = sm.isotropic_convolve(2.5 * a, 2.5 * b, 1, trials=50, rng=sm.Rng(47))
    assert np.abs(scaled.values - 2.5 * base.values).max() < 1e-10


def test_isotropic_matches_classical_three_moments():
    gen = sm.Rng(48).generator()
    a, b = gen.standard_normal(8), gen.standard_normal(8)
    iso = sm.isotropic_convolve(a, b, 1, trials=30_000, rng=sm.Rng(49))
    cls = sm.classical_convolve(EmpiricalMeasure.from_samples(a),
                                EmpiricalMeasure.from_samples(b), "exact_cross")
    si, sc = sm.summarize(iso), sm.summarize(cls)
    assert abs(si.mu - sc.mu) < 1e-8          # exact per trial by trace invariance
    for stat, tol in (("sigma2", 0.05), ("m3", 1.0)):
        assert abs(getattr(si, stat) - getattr(sc, stat)) < tol


def test_isotropic_validation():
    with pytest.raises(ValueError, match="equal length"):
        sm.isotropic_convolve(np.ones(3), np.ones(4), 1, 1, sm.Rng(0))


# ---------------------------------------------------------------------------
# quantum spectra


def test_quantum_identity_locals_single_atom():
    spec = sm.ChainSpec(n_sites=4, site_dim=2,
                        ensemble=sm.LocalEnsemble.fixed_spectrum(np.ones(4)))
    measure = sm.quantum_spectrum(spec, trials=5, rng=sm.Rng(50))
    assert np.abs(measure.values - 3.0).max() < 1e-8  # N-1 copies of the identity


def test_pools_deterministic_and_subset_invariant(spec_n3):
    p1 = sm.ensemble_pools(spec_n3, 2000, sm.Rng(51), keep_samples=True)
    p2 = sm.ensemble_pools(spec_n3, 2000, sm.Rng(51), keep_samples=True)
    p3 = sm.ensemble_pools(spec_n3, 2000, sm.Rng(51), kinds=("iso",), keep_samples=True)
    for kind in ("classical", "iso", "quantum"):
        assert np.array_equal(p1[kind].samples, p2[kind].samples)
    assert np.array_equal(p1["iso"].samples, p3["iso"].samples)


def test_pool_block_statistics(spec_n3):
    pool = sm.ensemble_pools(spec_n3, 5000, sm.Rng(52), kinds=("classical",))["classical"]
    assert pool.block_values("gamma2").size == 50
    assert pool.stderr("mu") > 0
    # block sums partition the pooled sums
    assert np.abs(pool.block_sums.sum(axis=0) - pool.moment_sums).max() < 1e-6
    assert pool.block_counts.sum() == pool.count


# ---------------------------------------------------------------------------
# mixed trace words


def test_word_validation(spec_n3):
    with pytest.raises(ValueError):
        sm.mixed_trace_mc([], "haar", spec_n3, 10, sm.Rng(0))
    with pytest.raises(ValueError):
        sm.mixed_trace_mc([("a", 0)], "haar", spec_n3, 10, sm.Rng(0))
    with pytest.raises(ValueError):
        sm.mixed_trace_mc([("a", 1)], "twist", spec_n3, 10, sm.Rng(0))


def test_word_pure_a_power_rotation_independent(spec_n3):
    # A-only words never see the rotation; shared local draws make them equal
    vals = [sm.mixed_trace_mc([("a", 4)], rot, spec_n3, 4000, sm.Rng(53))
            for rot in ("permutation", "haar", "quantum")]
    assert vals[0] == vals[1] == vals[2]


def test_word_departing_term_ordering(spec_n5):
    word = [("a", 1), ("b", 1), ("a", 1), ("b", 1)]
    out = {rot: sm.mixed_trace_mc(word, rot, spec_n5, 8000, sm.Rng(54), with_stderr=True)
           for rot in ("permutation", "haar", "quantum")}
    (vc, sc), (vi, si), (vq, sq) = out["permutation"], out["haar"], out["quantum"]
    assert vc - vq >= -3 * np.hypot(sc, sq)
    assert vq - vi >= -3 * np.hypot(sq, si)


# ---------------------------------------------------------------------------
# density utilities


def test_gram_charlier_standard_normal():
    stats = sm.MomentSummary.from_cumulants(0.0, 1.0, 0.0, 0.0)
    edges = np.linspace(-5, 5, 41)
    dens = sm.gram_charlier_density(stats, edges)
    mids = dens.midpoints()
    ref = np.exp(-mids ** 2 / 2) * np.diff(edges)
    ref /= ref.sum()
    assert np.abs(dens.masses - ref).max() < 1e-12
    assert abs(dens.masses.sum() - 1.0) < 1e-12


def test_gram_charlier_symmetry_without_skew():
    stats = sm.MomentSummary.from_cumulants(2.0, 4.0, 0.0, 0.8 * 16.0)
    edges = np.linspace(2.0 - 6, 2.0 + 6, 25)   # symmetric about mu
    dens = sm.gram_charlier_density(stats, edges)
    assert np.abs(dens.masses - dens.masses[::-1]).max() < 1e-10


def test_gram_charlier_rejects_degenerate():
    stats = sm.MomentSummary.from_cumulants(0.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        sm.gram_charlier_density(stats, np.linspace(-1, 1, 5))


def test_ks_distance_basics():
    x = EmpiricalMeasure.from_samples([0.0, 1.0, 2.0])
    assert sm.ks_distance(x, x) == 0.0
    y = EmpiricalMeasure.from_samples([10.0, 11.0])
    assert sm.ks_distance(x, y) == 1.0
    z = EmpiricalMeasure.from_samples([0.5, 1.5])
    assert sm.ks_distance(x, z) == sm.ks_distance(z, x)


def test_ks_distance_density_vs_measure():
    gen = sm.Rng(55).generator()
    x = gen.standard_normal(20_000)
    meas = EmpiricalMeasure.from_samples(x)
    dens = sm.histogram(meas, 100)
    assert sm.ks_distance(meas, dens) < 0.02
    assert sm.ks_distance(dens, dens) == 0.0


def test_histogram_single_atom():
    dens = sm.histogram(EmpiricalMeasure([3.0], [1.0]), 1)
    assert np.array_equal(dens.masses, [1.0])


def test_histogram_mass_preservation_and_refinement():
    gen = sm.Rng(56).generator()
    meas = EmpiricalMeasure.from_samples(gen.standard_normal(5000))
    for bins in (1, 7, 50, 333):
        assert abs(sm.histogram(meas, bins).masses.sum() - 1.0) < 1e-12
    edges = np.linspace(-1.0, 1.0, 9)            # clips the tails into end bins
    assert abs(sm.histogram(meas, edges).masses.sum() - 1.0) < 1e-12


def test_histogram_default_fd():
    gen = sm.Rng(57).generator()
    meas = EmpiricalMeasure.from_samples(gen.standard_normal(4000))
    dens = sm.histogram(meas)
    fd = freedman_diaconis_edges(meas)
    assert dens.bin_edges.size == fd.size


def test_pm1_classical_three_atoms():
    spec = sm.ChainSpec(n_sites=3, site_dim=2, ensemble=sm.LocalEnsemble.pm1())
    pool = sm.ensemble_pools(spec, 20_000, sm.Rng(58), kinds=("classical",),
                             keep_samples=True)["classical"]
    edges = np.array([-2.5, -1.5, -0.5, 0.5, 1.5, 2.5])
    dens = sm.histogram(pool.measure(), edges)
    assert (dens.masses > 0).sum() == 3
    assert np.abs(dens.masses[[0, 2, 4]] - [0.25, 0.5, 0.25]).max() < 0.02
