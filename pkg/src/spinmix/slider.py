"""Closed-form mixture weight and the fourth-moment machinery behind it.

The chain spectrum is approximated by p·classical + (1−p)·isotropic where p
matches the excess kurtosis.  Everything needed to evaluate p analytically
lives here: Haar fourth moments, the chain-level moments of the commuting
diagonals, the two fourth-moment gap terms, the universal closed form, bond
4-tuple counting, and the Wishart worked example.

Moment conventions: for one bond term, m_j = E(λ^j) for a uniformly chosen
eigenvalue and m11 = E(λ_i λ_j) for distinct eigenvalues of the *same* term.
Cross products between different (independent) bonds reduce to m1², which is
what enters the k(k−1) combinatorial terms below.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import matgen
from .chain import STREAM_ISO, LocalEnsemble, dense_cap
from .rng import Rng
from .spectra import DensityEstimate, EmpiricalMeasure, MomentSummary, _chunk_trials

__all__ = [
    "SliderDims",
    "LocalMoments",
    "SliderResult",
    "TermCounts",
    "haar_q4",
    "chain_m2",
    "chain_m11",
    "chain_moment_gap",
    "iso_gap",
    "quantum_gap",
    "frob_uv_classical",
    "frob_uv_quantum",
    "p_universal",
    "slider_p",
    "p_from_kurtoses",
    "ensemble_slider",
    "ie_mixture",
    "term_counts",
    "wishart_moments",
    "goe_moments",
    "pm1_moments",
    "fixed_spectrum_moments",
    "local_moments",
    "wishart_chain_stats",
    "appendix_iso_expectation",
    "iso_multi",
]


@dataclass(frozen=True)
class SliderDims:
    """Size bookkeeping for one parity side of a nearest-neighbor chain.

    k bonds of local dimension n = d² tile into m = d^N with multiplicity t,
    so t·n^k = m exactly.
    """

    n_sites: int
    d: int
    beta: float
    k: int
    n: int
    m: int
    t: int

    def __post_init__(self):
        if self.k < 1 or self.d < 2:
            raise ValueError("need k >= 1 and d >= 2")
        if self.t * self.n ** self.k != self.m:
            raise ValueError("inconsistent dims: t * n^k != m")

    @classmethod
    def odd_side(cls, n_sites: int, d: int, beta: float = 1.0) -> "SliderDims":
        if n_sites < 3:
            raise ValueError("need at least 3 sites")
        k = (n_sites - 1) // 2 if n_sites % 2 else n_sites // 2
        n, m = d * d, d ** n_sites
        return cls(n_sites, d, beta, k, n, m, m // n ** k)

    @classmethod
    def even_side(cls, n_sites: int, d: int, beta: float = 1.0) -> "SliderDims":
        if n_sites < 3:
            raise ValueError("need at least 3 sites")
        k = (n_sites - 1) // 2 if n_sites % 2 else (n_sites - 2) // 2
        n, m = d * d, d ** n_sites
        return cls(n_sites, d, beta, k, n, m, m // n ** k)

    def partner(self) -> "SliderDims":
        """The other parity side of the same chain."""
        if self.n_sites % 2:
            return self
        if self.k == self.n_sites // 2:
            return SliderDims.even_side(self.n_sites, self.d, self.beta)
        return SliderDims.odd_side(self.n_sites, self.d, self.beta)


@dataclass(frozen=True)
class LocalMoments:
    """Eigenvalue moments of one bond term (m3/m4 optional)."""

    m1: float
    m2: float
    m11: float
    m3: Optional[float] = None
    m4: Optional[float] = None

    def cumulants(self):
        if self.m3 is None or self.m4 is None:
            raise ValueError("m3 and m4 are required for cumulants")
        s = MomentSummary.from_raw_moments(self.m1, self.m2, self.m3, self.m4)
        return s.kappa1, s.kappa2, s.kappa3, s.kappa4


@dataclass(frozen=True)
class SliderResult:
    """Mixture weight plus the kurtoses and gap terms that produced it."""

    p: float
    one_minus_p: float
    gap_iso: float
    gap_quantum: float
    gamma2_classical: Optional[float] = None
    gamma2_iso: Optional[float] = None
    gamma2_quantum: Optional[float] = None


TermCounts = namedtuple("TermCounts",
                        ["four", "three", "two_not_entangled", "two_entangled"])


# ---------------------------------------------------------------------------
# Haar moments and the singular-value pair values


def haar_q4(m: int, beta: float) -> float:
    """E|q_ij|⁴ for an m×m beta-Haar matrix: (β+2)/(m(mβ+2))."""
    if m < 1 or beta < 1:
        raise ValueError("need m >= 1 and beta >= 1")
    return (beta + 2.0) / (m * (m * beta + 2.0))


def frob_uv_classical(d: int, beta: float = 1.0) -> float:
    """E‖uv‖_F² for d×d reshapes u, v of two independent Haar columns: 1/d."""
    if d < 1:
        raise ValueError("need d >= 1")
    return 1.0 / d


def frob_uv_quantum(d: int, beta: float = 1.0) -> float:
    """E‖uv(uv)†‖_F² for the same pair; the structured-rotation analogue."""
    if d < 1 or beta < 1:
        raise ValueError("need d >= 1 and beta >= 1")
    num = beta ** 2 * (3 * d * (d - 1) + 1) + 2 * beta * (3 * d - 1) + 4
    return num / (d * (beta * d * d + 2.0) ** 2)


# ---------------------------------------------------------------------------
# chain-level moments of one parity diagonal


def chain_m2(local: LocalMoments, dims: SliderDims) -> float:
    """E(a_i²) of the parity diagonal: k·m2 + k(k−1)·m1².

    Distinct bonds are independent, so their eigenvalue cross products
    factor into squared means.
    """
    k = dims.k
    return k * local.m2 + k * (k - 1) * local.m1 ** 2


def chain_m11(local: LocalMoments, dims: SliderDims) -> float:
    """E(a_i a_j), i≠j, of the parity diagonal.

    Same-bond contributions split by whether the two diagonal positions hit
    the same local eigenvalue (multiplicity t n^(k−1) copies each) or two
    distinct ones.
    """
    k, n, m, t = dims.k, dims.n, dims.m, dims.t
    if m <= 1:
        raise ValueError("need m > 1")
    copies = t * n ** (k - 1)
    same = (copies - 1) * local.m2 + copies * (n - 1) * local.m11
    return k * (k - 1) * local.m1 ** 2 + k * same / (m - 1)


def chain_moment_gap(local: LocalMoments, dims: SliderDims) -> float:
    """m2^A − m11^A in factored form: t·k(n−1)n^(k−1)/(m−1) · (m2 − m11)."""
    k, n, m, t = dims.k, dims.n, dims.m, dims.t
    return t * k * (n - 1) * n ** (k - 1) / (m - 1) * (local.m2 - local.m11)


# ---------------------------------------------------------------------------
# the two fourth-moment gaps


def iso_gap(local_odd: LocalMoments, local_even: LocalMoments,
            dims: SliderDims) -> float:
    """(1/m) E[Tr(AΠᵀBΠ)² − Tr(AQᵀBQ)²] for a full Haar rotation Q."""
    other = dims.partner()
    gap_a = chain_moment_gap(local_odd, dims)
    gap_b = chain_moment_gap(local_even, other)
    return gap_a * gap_b * (1.0 - dims.m * haar_q4(dims.m, dims.beta))


def _entangled_pairs(n_sites: int) -> int:
    # 2k−1 for N odd (k = (N−1)/2) and 2(k−1) for N even (k = N/2)
    # both reduce to N−2: one shared site per interior site of the chain
    return n_sites - 2


def quantum_gap(local_odd: LocalMoments, local_even: LocalMoments,
                dims: SliderDims) -> float:
    """(1/m) E[Tr(AΠᵀBΠ)² − Tr(AQ_qᵀBQ_q)²] for the structured rotation.

    Only bond pairs sharing a site depart from the classical value; each
    contributes d·(m2−m11)_odd·(m2−m11)_even times the singular-value gap.
    """
    d, beta = dims.d, dims.beta
    pairs = _entangled_pairs(dims.n_sites)
    delta = frob_uv_classical(d, beta) - frob_uv_quantum(d, beta)
    return d * pairs * (local_odd.m2 - local_odd.m11) \
        * (local_even.m2 - local_even.m11) * delta


# ---------------------------------------------------------------------------
# the universal weight


def p_universal(n_sites: int, d: int, beta: float = 1.0) -> SliderResult:
    """Closed-form mixture weight for an odd-length chain.

    Independent of the bond ensemble; only (N, d, β) enter.  For even N use
    :func:`slider_p`, which takes the gap-ratio route with the even-chain
    pair counts.
    """
    if n_sites % 2 == 0:
        raise ValueError("closed form is stated for odd N; "
                         "use slider_p for the even-N gap route")
    if n_sites < 3 or d < 2 or beta < 1:
        raise ValueError("need odd N >= 3, d >= 2, beta >= 1")
    k = (n_sites - 1) // 2
    one_minus_p = (
        (1.0 - float(d) ** (-2 * k - 1))
        * (1.0 - ((k - 1) / k) ** 2)
        * (1.0 - (1.0 - float(d) ** (-2 * k + 1)) / (1.0 + beta * d * d / 2.0))
        * (d / (d + 1.0)) ** 2
        * (beta * (d ** 3 + d ** 2 - 2 * d + 1) + 4 * d - 2)
        / ((d - 1.0) * (beta * d * d + 2.0))
    )
    return _clamped_result(one_minus_p, n_sites, d, beta)


def _clamped_result(one_minus_p, n_sites, d, beta) -> SliderResult:
    # the interval is guaranteed analytically; only float noise is clamped
    if one_minus_p < 0.0:
        if one_minus_p < -1e-12:
            raise ValueError(f"1-p = {one_minus_p} escaped [0, 1]")
        one_minus_p = 0.0
    if one_minus_p > 1.0:
        if one_minus_p > 1.0 + 1e-12:
            raise ValueError(f"1-p = {one_minus_p} escaped [0, 1]")
        one_minus_p = 1.0
    dims = SliderDims.odd_side(n_sites, d, beta)
    other = dims.partner()
    ca = dims.t * dims.k * (dims.n - 1) * dims.n ** (dims.k - 1) / (dims.m - 1)
    cb = other.t * other.k * (other.n - 1) * other.n ** (other.k - 1) / (other.m - 1)
    g_iso = ca * cb * (1.0 - dims.m * haar_q4(dims.m, beta))
    g_q = d * _entangled_pairs(n_sites) \
        * (frob_uv_classical(d, beta) - frob_uv_quantum(d, beta))
    return SliderResult(p=1.0 - one_minus_p, one_minus_p=one_minus_p,
                        gap_iso=g_iso, gap_quantum=g_q)


def slider_p(n_sites: int, d: int, beta: float = 1.0) -> SliderResult:
    """Mixture weight for any N >= 3: closed form (odd) or gap ratio (even).

    For even N the local-moment factors cancel between numerator and
    denominator exactly as in the odd case, so the result is still a
    function of (N, d, β) alone.
    """
    if n_sites % 2:
        return p_universal(n_sites, d, beta)
    unit = LocalMoments(m1=0.0, m2=1.0, m11=0.0)
    dims = SliderDims.odd_side(n_sites, d, beta)
    one_minus_p = quantum_gap(unit, unit, dims) / iso_gap(unit, unit, dims)
    return _clamped_result(one_minus_p, n_sites, d, beta)


def p_from_kurtoses(g2q: float, g2c: float, g2iso: float) -> float:
    """Empirical mixture weight (γ₂^q − γ₂^iso)/(γ₂^c − γ₂^iso), unclamped."""
    denom = g2c - g2iso
    if denom == 0:
        raise ZeroDivisionError("classical and isotropic kurtoses coincide")
    return (g2q - g2iso) / denom


def ensemble_slider(local: LocalMoments, dims: SliderDims) -> SliderResult:
    """Slider with all three closed-form kurtoses for iid bond terms.

    Requires m3/m4 of the local law.  The chain's classical cumulants are
    (N−1) times the local ones; the isotropic and quantum kurtoses follow by
    subtracting twice the respective gap over σ⁴.
    """
    n_sites = dims.n_sites
    _, k2, _, k4 = local.cumulants()
    sigma2 = (n_sites - 1) * k2
    g2c = (n_sites - 1) * k4 / sigma2 ** 2
    g_iso = iso_gap(local, local, dims)
    g_q = quantum_gap(local, local, dims)
    g2iso = g2c - 2.0 * g_iso / sigma2 ** 2
    g2q = g2c - 2.0 * g_q / sigma2 ** 2
    p = p_from_kurtoses(g2q, g2c, g2iso)
    return SliderResult(p=p, one_minus_p=1.0 - p, gap_iso=g_iso, gap_quantum=g_q,
                        gamma2_classical=g2c, gamma2_iso=g2iso, gamma2_quantum=g2q)


def ie_mixture(p: float, classical: DensityEstimate,
               iso: DensityEstimate) -> DensityEstimate:
    """Binwise convex combination p·classical + (1−p)·iso on shared edges."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if classical.bin_edges.shape != iso.bin_edges.shape or \
            not np.array_equal(classical.bin_edges, iso.bin_edges):
        raise ValueError("densities must share identical bin edges")
    return DensityEstimate(classical.bin_edges,
                           p * classical.masses + (1.0 - p) * iso.masses)


# ---------------------------------------------------------------------------
# bond 4-tuple counting


def term_counts(n_sites: int) -> TermCounts:
    """Counts of (odd, even, odd, even) bond 4-tuples by sharing pattern.

    four: all distinct; three: one repeated parity pair; two: both repeated,
    split by whether the odd and even bonds share a site (entangled).
    """
    if n_sites < 3:
        raise ValueError("need N >= 3")
    if n_sites % 2:
        k = (n_sites - 1) // 2
        return TermCounts(k * k * (k - 1) ** 2, 2 * k * k * (k - 1),
                          (k - 1) ** 2, 2 * k - 1)
    k = n_sites // 2
    return TermCounts(k * (k - 1) ** 2 * (k - 2), k * (k - 1) * (2 * k - 3),
                      (k - 1) * (k - 2), 2 * (k - 1))


# ---------------------------------------------------------------------------
# local-moment tables


def wishart_moments(r: int, n: int, beta: float = 1.0) -> LocalMoments:
    """Eigenvalue moments of W†W with W an (r, n) beta-Gaussian matrix."""
    if not 1 <= r <= n:
        raise ValueError("need 1 <= r <= n")
    b = float(beta)
    m1 = b * r
    m2 = b * r * (b * (r + n - 1) + 2)
    m3 = b * r * (b * b * (n * n + (r - 1) * (3 * n + r - 2))
                  + 6 * b * (n + r - 1) + 8)
    m4 = b * r * (48
                  + b ** 3 * (n ** 3 + 6 * n * n * (r - 1)
                              + n * (6 * r - 11) * (r - 1)
                              - 6 * (r * r + 1) + r ** 3 + 11 * r)
                  + 2 * b * b * (6 * (n * n + r * r)
                                 + 17 * (n * (r - 1) - r) + 11)
                  + 44 * b * (n + r - 1))
    m11 = b * b * r * (r - 1)
    return LocalMoments(m1=m1, m2=m2, m11=m11, m3=m3, m4=m4)


def goe_moments(n: int, beta: float = 1.0) -> LocalMoments:
    """First two moments of the symmetrized Gaussian bond ensemble.

    With unit-variance components the diagonal has variance 1 and the
    off-diagonal β/2 per entry, giving m2 = 1 + (n−1)β/2 and m11 = −β/2.
    Third/fourth moments are left to Monte Carlo.
    """
    return LocalMoments(m1=0.0, m2=1.0 + (n - 1) * beta / 2.0,
                        m11=-beta / 2.0, m3=0.0, m4=None)


def pm1_moments(n: int, balanced: bool = False) -> LocalMoments:
    """±1-spectrum moments: iid signs (m11 = 0) or balanced (m11 = −1/(n−1))."""
    m11 = -1.0 / (n - 1) if balanced else 0.0
    return LocalMoments(m1=0.0, m2=1.0, m11=m11, m3=0.0, m4=1.0)


def fixed_spectrum_moments(values) -> LocalMoments:
    v = np.asarray(values, dtype=float).ravel()
    n = v.size
    if n < 2:
        raise ValueError("need at least two eigenvalues")
    s1, s2 = v.sum(), (v ** 2).sum()
    return LocalMoments(m1=float(v.mean()), m2=float((v ** 2).mean()),
                        m11=float((s1 * s1 - s2) / (n * (n - 1))),
                        m3=float((v ** 3).mean()), m4=float((v ** 4).mean()))


def local_moments(ensemble: LocalEnsemble, n: int, beta: float = 1.0) -> LocalMoments:
    if ensemble.kind == "wishart":
        return wishart_moments(ensemble.rank, n, beta)
    if ensemble.kind == "goe":
        return goe_moments(n, beta)
    if ensemble.kind == "pm1":
        return pm1_moments(n, balanced=False)
    if ensemble.kind == "pm1_balanced":
        return pm1_moments(n, balanced=True)
    if ensemble.kind == "fixed":
        return fixed_spectrum_moments(ensemble.values)
    raise ValueError(f"unknown ensemble kind {ensemble.kind!r}")


def wishart_chain_stats(n_sites: int, d: int, r: int) -> MomentSummary:
    """β=1 Wishart chain closed forms for (μ, σ², γ₁, γ₂ classical)."""
    n = d * d
    mu = (n_sites - 1) * r
    sigma2 = r * (n_sites - 1) * (n + 1)
    gamma1 = (n * n + 3 * n + 4) / ((n + 1) ** 1.5 * math.sqrt(r * (n_sites - 1)))
    gamma2 = (n * n * (n + 6) - r * n * (n + 1) + 21 * n + 2 * r + 20) \
        / (r * (n_sites - 1) * (n + 1) ** 2)
    return MomentSummary.from_cumulants(mu, sigma2,
                                        gamma1 * sigma2 ** 1.5,
                                        gamma2 * sigma2 ** 2)


# ---------------------------------------------------------------------------
# collision-count oracle


def appendix_iso_expectation(chain_a, chain_b, m: int, beta: float) -> float:
    """(1/m) E Tr(AQᵀBQ)² from chain-level moments by collision counting.

    `chain_a`/`chain_b` are (m2, m11) pairs for the two parity diagonals.
    Grouping the index sums by the number of collisions and weighting with
    the Haar pair moments gives a closed form that must agree with the
    classical value minus the isotropic gap exactly.
    """
    m2a, m11a = chain_a
    m2b, m11b = chain_b
    w = beta * (m - 1.0) / (m * beta + 2.0)
    return ((beta + 2.0) / (m * beta + 2.0) * m2a * m2b
            + w * (m2b * m11a + m2a * m11b)
            - w * m11a * m11b)


# ---------------------------------------------------------------------------
# all-isotropic sum for fixed summands


def iso_multi(terms: Sequence[np.ndarray], beta: int, trials: int,
              rng: Rng) -> EmpiricalMeasure:
    """Pooled spectra of Σ_l Q_l† M_l Q_l with independent Haar Q_l per trial."""
    mats = [np.asarray(t) for t in terms]
    if not mats:
        raise ValueError("need at least one term")
    m = mats[0].shape[0]
    for t in mats:
        if t.shape != (m, m):
            raise ValueError("all terms must share one dimension")
    if m > dense_cap():
        raise ValueError(f"dimension {m} exceeds the dense cap")
    if trials < 1:
        raise ValueError("need trials >= 1")
    out = np.empty((trials, m))
    step = _chunk_trials(m, trials)
    cplx = any(np.iscomplexobj(t) for t in mats) or beta == 2
    for lo in range(0, trials, step):
        hi = min(trials, lo + step)
        c = hi - lo
        gen = rng.substream(STREAM_ISO, lo)
        acc = np.zeros((c, m, m), dtype=complex if cplx else float)
        for t in mats:
            q = matgen.haar_batch(m, beta, gen, c)
            if m <= 64:
                acc += np.einsum("tji,jl,tlk->tik", q.conj(), t, q)
            else:
                for i in range(c):
                    acc[i] += q[i].conj().T @ t @ q[i]
        out[lo:hi] = np.linalg.eigvalsh(acc)
    return EmpiricalMeasure.from_samples(out)
