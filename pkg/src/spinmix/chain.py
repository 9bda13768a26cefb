"""Chain Hamiltonians: Kronecker embedding, odd/even split, structured rotation.

A chain of N qudits of dimension d carries one random bond term per pair of
adjacent sites (range L=2 unless stated).  Bonds at odd positions mutually
commute, as do bonds at even positions, so each parity class is jointly
diagonalizable; the diagonals a and b built here are the raw material for the
classical / isotropic / quantum convolutions in :mod:`spinmix.spectra`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import reduce
from typing import Optional, Sequence

import numpy as np

from . import matgen
from .matgen import HaarMatrix, LocalTerm
from .rng import Rng

__all__ = [
    "DEFAULT_MAX_DIM",
    "LocalEnsemble",
    "ChainSpec",
    "OddEvenDiagonals",
    "QuantumRotation",
    "embed_local",
    "assemble_chain",
    "odd_even_diagonals",
    "build_quantum_rotation",
    "exact_spectrum",
]

DEFAULT_MAX_DIM = 4096
_MAX_DIM_ENV = "IE_MAX_DIM"

# substream purposes shared by all samplers; using separate child streams per
# purpose keeps each ensemble's output independent of which others ran
STREAM_LOCAL_EIGS = 0
STREAM_CLASSICAL = 1
STREAM_ISO = 2
STREAM_LOCAL_VECS = 3
STREAM_EXTRA = 4


def dense_cap(override: Optional[int] = None) -> int:
    if override is not None:
        return int(override)
    return int(os.environ.get(_MAX_DIM_ENV, DEFAULT_MAX_DIM))


@dataclass(frozen=True)
class LocalEnsemble:
    """Law of one bond term.  Use the constructors, not the raw fields."""

    kind: str
    rank: int = 0
    values: tuple = ()

    @classmethod
    def wishart(cls, rank: int) -> "LocalEnsemble":
        return cls("wishart", rank=rank)

    @classmethod
    def goe(cls) -> "LocalEnsemble":
        return cls("goe")

    @classmethod
    def pm1(cls, balanced: bool = False) -> "LocalEnsemble":
        """Haar eigenvectors with ±1 eigenvalues, iid signs by default.

        `balanced=True` pins the spectrum to exactly half +1 / half −1,
        which is a fixed-spectrum ensemble in disguise.
        """
        return cls("pm1_balanced" if balanced else "pm1")

    @classmethod
    def fixed_spectrum(cls, values) -> "LocalEnsemble":
        return cls("fixed", values=tuple(float(v) for v in values))

    def describe(self) -> str:
        if self.kind == "wishart":
            return f"wishart(r={self.rank})"
        if self.kind == "fixed":
            return f"fixed_spectrum(len={len(self.values)})"
        return self.kind


@dataclass(frozen=True)
class ChainSpec:
    """Full experiment description for one chain ensemble."""

    n_sites: int
    site_dim: int
    ensemble: LocalEnsemble
    beta: int = 1
    coupling_range: int = 2
    boundary: str = "open"
    max_dim: Optional[int] = None

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError("need at least 2 sites")
        if self.site_dim < 2:
            raise ValueError("site dimension must be >= 2")
        if not 2 <= self.coupling_range <= self.n_sites:
            raise ValueError("coupling range must satisfy 2 <= L <= N")
        if self.beta not in (1, 2):
            raise ValueError("beta must be 1 or 2 for sampling")
        if self.boundary != "open":
            raise ValueError("only open boundary conditions are supported")
        if self.ensemble.kind == "wishart" and not 1 <= self.ensemble.rank <= self.local_dim:
            raise ValueError("wishart rank must satisfy 1 <= r <= d^L")
        if self.ensemble.kind == "fixed" and len(self.ensemble.values) != self.local_dim:
            raise ValueError(f"fixed spectrum must have d^L = {self.local_dim} values")
        if self.ensemble.kind == "pm1_balanced" and self.local_dim % 2:
            raise ValueError("balanced ±1 spectrum needs even local dimension")

    # -- derived sizes ------------------------------------------------------
    @property
    def d(self) -> int:
        return self.site_dim

    @property
    def n(self) -> int:
        return self.site_dim ** 2

    @property
    def local_dim(self) -> int:
        return self.site_dim ** self.coupling_range

    @property
    def m(self) -> int:
        return self.site_dim ** self.n_sites

    @property
    def n_bonds(self) -> int:
        return self.n_sites - self.coupling_range + 1

    @property
    def odd_bonds(self) -> tuple:
        """1-based bond positions l = 1, 3, ... (L=2 only)."""
        self._require_nearest_neighbor()
        return tuple(range(1, self.n_sites, 2))

    @property
    def even_bonds(self) -> tuple:
        self._require_nearest_neighbor()
        return tuple(range(2, self.n_sites, 2))

    def _require_nearest_neighbor(self):
        if self.coupling_range != 2:
            raise ValueError("odd/even split is defined for L=2 only")

    def check_dense_cap(self):
        cap = dense_cap(self.max_dim)
        if self.m > cap:
            raise ValueError(
                f"dense dimension d^N = {self.m} exceeds the cap {cap}; "
                f"raise max_dim or the {_MAX_DIM_ENV} environment variable")


@dataclass(frozen=True)
class OddEvenDiagonals:
    """Diagonals of the jointly diagonalized odd (a) and even (b) parts."""

    a: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class QuantumRotation:
    """The structured rotation aligning the even eigenbasis with the odd one."""

    matrix: np.ndarray

    def orthogonality_defect(self) -> float:
        q = self.matrix
        return float(np.abs(q.conj().T @ q - np.eye(q.shape[0])).max())


# ---------------------------------------------------------------------------
# local term drawing


def draw_local_batch(spec: ChainSpec, count: int, gen, vec_gen=None,
                     need_dense: bool = True):
    """Batched bond draws for Monte Carlo loops.

    Returns (evals, dense) with evals of shape (count, n_bonds, d^L), sorted
    ascending per bond, and dense of shape (count, n_bonds, d^L, d^L) or
    None.  Eigenvalue draws and Haar eigenvector draws use separate
    generators so that samplers which skip the dense matrices still consume
    an identical eigenvalue stream.
    """
    ens, nb, nloc, beta = spec.ensemble, spec.n_bonds, spec.local_dim, spec.beta
    if ens.kind == "wishart":
        w = matgen.gaussian_batch((count * nb, ens.rank, nloc), beta, gen)
        dense = np.einsum("tri,trj->tij", w.conj(), w)
        dense = ((dense + dense.conj().swapaxes(-1, -2)) / 2.0).reshape(count, nb, nloc, nloc)
        return np.linalg.eigvalsh(dense), (dense if need_dense else None)
    if ens.kind == "goe":
        g = matgen.gaussian_batch((count, nb, nloc, nloc), beta, gen)
        dense = (g + g.conj().swapaxes(-1, -2)) / 2.0
        return np.linalg.eigvalsh(dense), (dense if need_dense else None)
    if ens.kind in ("pm1", "pm1_balanced", "fixed"):
        if ens.kind == "pm1":
            evals = np.where(gen.random((count, nb, nloc)) < 0.5, -1.0, 1.0)
            evals.sort(axis=-1)
        else:
            if ens.kind == "pm1_balanced":
                half = nloc // 2
                base = np.concatenate([-np.ones(half), np.ones(half)])
            else:
                base = np.sort(np.asarray(ens.values, dtype=float))
            evals = np.broadcast_to(base, (count, nb, nloc)).copy()
        dense = None
        if need_dense:
            if vec_gen is None:
                raise ValueError("need a vec_gen to draw Haar eigenvectors")
            q = matgen.haar_batch(nloc, beta, vec_gen, count * nb).reshape(count, nb, nloc, nloc)
            dense = np.einsum("tbij,tbj,tbkj->tbik", q, evals, q.conj())
            dense = (dense + dense.conj().swapaxes(-1, -2)) / 2.0
        return evals, dense
    raise ValueError(f"unknown ensemble kind {ens.kind!r}")


# ---------------------------------------------------------------------------
# embedding and assembly


def embed_local(term, bond_index: int, spec: ChainSpec) -> np.ndarray:
    """I_{d^(l-1)} ⊗ H ⊗ I on the full chain space, for bond l (1-based)."""
    h = term.matrix if isinstance(term, LocalTerm) else np.asarray(term)
    nloc = spec.local_dim
    if h.shape != (nloc, nloc):
        raise ValueError(f"local term must be {nloc}x{nloc}")
    if not 1 <= bond_index <= spec.n_bonds:
        raise ValueError(f"bond index must lie in 1..{spec.n_bonds}")
    left = spec.site_dim ** (bond_index - 1)
    right = spec.m // (left * nloc)
    return np.kron(np.kron(np.eye(left), h), np.eye(right))


def embed_sum_batch(dense: np.ndarray, spec: ChainSpec,
                    bond_positions: Optional[Sequence[int]] = None) -> np.ndarray:
    """Sum of embedded bond terms for a batch: (count, m, m).

    `bond_positions` gives the 1-based position of each slice of `dense`;
    by default the slices are all bonds 1..n_bonds in order.
    """
    count, nb, nloc = dense.shape[0], dense.shape[1], dense.shape[2]
    if bond_positions is None:
        bond_positions = range(1, nb + 1)
        if nb != spec.n_bonds:
            raise ValueError("batch holds a different number of bonds than the spec")
    bond_positions = list(bond_positions)
    if len(bond_positions) != nb or nloc != spec.local_dim:
        raise ValueError("batch shape does not match the chain spec")
    out = np.zeros((count, spec.m, spec.m), dtype=dense.dtype)
    for i, l in enumerate(bond_positions):
        left = spec.site_dim ** (l - 1)
        right = spec.m // (left * nloc)
        emb = np.einsum("pq,tij,rs->tpirqjs",
                        np.eye(left), dense[:, i], np.eye(right))
        out += emb.reshape(count, spec.m, spec.m)
    return out


def assemble_chain(spec: ChainSpec, rng: Rng):
    """Draw all bond terms and return (H, H_odd, H_even, local_terms)."""
    spec._require_nearest_neighbor()
    spec.check_dense_cap()
    evals, dense = draw_local_batch(
        spec, 1, rng.substream(STREAM_LOCAL_EIGS),
        vec_gen=rng.substream(STREAM_LOCAL_VECS), need_dense=True)
    terms = [LocalTerm(spec.local_dim, dense[0, i], eigenvalues=evals[0, i])
             for i in range(spec.n_bonds)]
    h_odd = np.zeros((spec.m, spec.m), dtype=dense.dtype)
    h_even = np.zeros_like(h_odd)
    for l, term in enumerate(terms, start=1):
        target = h_odd if l % 2 == 1 else h_even
        target += embed_local(term, l, spec)
    return h_odd + h_even, h_odd, h_even, terms


# ---------------------------------------------------------------------------
# odd/even diagonals


def diagonals_from_eigs(evals: np.ndarray, spec: ChainSpec):
    """Batched (a, b) diagonals from per-bond eigenvalues (count, nb, n)."""
    spec._require_nearest_neighbor()
    d, count = spec.site_dim, evals.shape[0]

    def build(idxs, repeat_inner, tile_outer):
        v = np.zeros((count, 1))
        for i in idxs:
            v = (v[:, :, None] + evals[:, i][:, None, :]).reshape(count, -1)
        if repeat_inner > 1:
            v = np.repeat(v, repeat_inner, axis=1)
        if tile_outer > 1:
            v = np.tile(v, (1, tile_outer))
        return v

    odd_idx = [l - 1 for l in spec.odd_bonds]
    even_idx = [l - 1 for l in spec.even_bonds]
    if spec.n_sites % 2 == 1:
        a = build(odd_idx, d, 1)     # (⊕ odds) ⊗ I_d
        b = build(even_idx, 1, d)    # I_d ⊗ (⊕ evens)
    else:
        a = build(odd_idx, 1, 1)     # odds cover every site
        b = build(even_idx, d, d)    # I_d ⊗ (⊕ evens) ⊗ I_d
    return a, b


def odd_even_diagonals(local_terms: Sequence[LocalTerm], spec: ChainSpec) -> OddEvenDiagonals:
    """Diagonals of A and B from the bond terms' eigenvalues."""
    if len(local_terms) != spec.n_bonds:
        raise ValueError(f"expected {spec.n_bonds} local terms")
    evals = np.stack([t.spectrum() for t in local_terms])[None, :, :]
    a, b = diagonals_from_eigs(evals, spec)
    return OddEvenDiagonals(a[0], b[0])


# ---------------------------------------------------------------------------
# structured rotation


def _kron_chain(mats) -> np.ndarray:
    return reduce(np.kron, mats)


def build_quantum_rotation(odd_factors, even_factors, spec: ChainSpec) -> QuantumRotation:
    """Assemble the bond-factor rotation from per-bond Haar matrices.

    `odd_factors` / `even_factors` are the eigenvector matrices (columns are
    eigenvectors) of the odd and even bond terms, each of size d².  The
    returned matrix is the relative rotation between the two parity
    eigenbases; conjugating diag(b) with it expresses the even part in the
    odd eigenbasis.
    """
    spec._require_nearest_neighbor()
    if spec.n_sites < 3:
        raise ValueError("need at least 3 sites for a two-parity chain")
    odd = [f.entries if isinstance(f, HaarMatrix) else np.asarray(f) for f in odd_factors]
    even = [f.entries if isinstance(f, HaarMatrix) else np.asarray(f) for f in even_factors]
    if len(odd) != len(spec.odd_bonds) or len(even) != len(spec.even_bonds):
        raise ValueError(
            f"need {len(spec.odd_bonds)} odd and {len(spec.even_bonds)} even factors; "
            f"got {len(odd)} and {len(even)}")
    n = spec.n
    for f in odd + even:
        if f.shape != (n, n):
            raise ValueError(f"every factor must be {n}x{n}")
    eye_d = np.eye(spec.site_dim)
    if spec.n_sites % 2 == 1:
        qa = np.kron(_kron_chain(odd), eye_d)
        qb = np.kron(eye_d, _kron_chain(even))
    else:
        qa = _kron_chain(odd)
        qb = np.kron(np.kron(eye_d, _kron_chain(even)), eye_d)
    return QuantumRotation(qa.conj().T @ qb)


# ---------------------------------------------------------------------------
# diagonalization


def exact_spectrum(matrix: np.ndarray, hermiticity_tol: float = 1e-10) -> np.ndarray:
    """Ascending eigenvalues of a dense Hermitian matrix."""
    h = np.asarray(matrix)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.abs(h).max()))
    defect = float(np.abs(h - h.conj().T).max())
    if defect > hermiticity_tol * scale:
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e})")
    return np.linalg.eigvalsh(h)
