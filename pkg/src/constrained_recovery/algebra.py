"""Finite-dimensional dagger-algebras of complex matrices.

An algebra is represented by an orthonormal basis of its linear span under
the Hilbert-Schmidt inner product Tr(X^dag Y). The module computes algebra
generation (closure under products and adjoints), commutants, centers,
minimal central projectors, the block (Wedderburn) factorization, and the
trace-preserving conditional expectation each algebra induces. Everything is
dense and aimed at ambient dimensions in the tens.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isqrt

import numpy as np

from . import linalg
from .channels import Channel

__all__ = [
    "AlgebraBasis",
    "BlockStructure",
    "Sector",
    "DegenerateSplitError",
    "generate_algebra",
    "commutant",
    "center",
    "minimal_central_projectors",
    "block_structure",
    "conditional_expectation",
    "join",
    "intersect",
    "contains",
    "equal_spans",
    "relative_commutant",
]

DEFAULT_SEED = 1793


class DegenerateSplitError(RuntimeError):
    """Eigenvalue clusters sit too close to separate sectors reliably."""


class AlgebraBasis:
    """Orthonormal Hilbert-Schmidt basis of a dagger-algebra's span.

    Instances are immutable after construction. The constructor trusts the
    caller on orthonormality and algebraic closure; :func:`generate_algebra`
    is the safe entry point for arbitrary generating sets.
    """

    def __init__(self, ambient_dim, basis):
        self.ambient_dim = int(ambient_dim)
        mats = [np.asarray(b, dtype=complex) for b in basis]
        for b in mats:
            if b.shape != (self.ambient_dim, self.ambient_dim):
                raise ValueError(
                    f"basis element of shape {b.shape} in ambient dimension "
                    f"{self.ambient_dim}"
                )
        self.basis = mats
        if mats:
            self._rows = np.stack([linalg.vec(b) for b in mats])
        else:
            self._rows = np.zeros((0, self.ambient_dim**2), dtype=complex)

    @property
    def dim(self):
        return len(self.basis)

    def __repr__(self):
        return f"AlgebraBasis(ambient_dim={self.ambient_dim}, dim={self.dim})"


def _extend_rows(rows, candidates, tol=1e-10, chunk=2048):
    for lo in range(0, candidates.shape[0], chunk):
        stacked = np.vstack([rows, candidates[lo : lo + chunk]])
        rows = linalg.orthonormal_rows(stacked, tol=tol)
    return rows


def generate_algebra(generators, ambient_dim):
    """Smallest identity-containing dagger-algebra containing the generators.

    Iterates span extension by pairwise products and adjoints until a fixed
    point; each round only multiplies against the freshly added directions.
    The basis is orthonormalized by modified Gram-Schmidt with drop tolerance
    1e-10.
    """
    d = int(ambient_dim)
    mats = [np.asarray(g, dtype=complex) for g in generators]
    for g in mats:
        if g.shape != (d, d):
            raise ValueError(f"generator of shape {g.shape} in dimension {d}")
    seed = [linalg.vec(np.eye(d))]
    for g in mats:
        seed.append(linalg.vec(g))
        seed.append(linalg.vec(g.conj().T))
    rows = linalg.orthonormal_rows(np.stack(seed))
    fresh = rows
    while rows.shape[0] < d * d:
        cur = rows.reshape(-1, d, d)
        new = fresh.reshape(-1, d, d)
        candidates = np.concatenate(
            [
                np.einsum("iab,jbc->ijac", cur, new).reshape(-1, d * d),
                np.einsum("iab,jbc->ijac", new, cur).reshape(-1, d * d),
                new.conj().transpose(0, 2, 1).reshape(-1, d * d),
            ]
        )
        before = rows.shape[0]
        rows = _extend_rows(rows, candidates)
        if rows.shape[0] == before:
            break
        fresh = rows[before:]
    return AlgebraBasis(d, [linalg.unvec(r, (d, d)) for r in rows])


def commutant(a):
    """The algebra of everything commuting with every element of ``a``.

    The stacked commutator maps X -> [B, X] over the basis are assembled in
    Gram (normal-equation) form, whose kernel is the commutant. Squaring
    pushes genuine spectrum far above floating-point noise at this scale, so
    a relative eigenvalue cutoff of 1e-10 cleanly separates the kernel.
    """
    d = a.ambient_dim
    eye = np.eye(d)
    s_left = sum(b.conj().T @ b for b in a.basis)
    s_right = sum(b @ b.conj().T for b in a.basis)
    h = np.kron(s_left, eye) + np.kron(eye, s_right.T)
    for b in a.basis:
        h -= np.kron(b.conj().T, b.T) + np.kron(b, b.conj())
    w, u = np.linalg.eigh((h + h.conj().T) / 2)
    cols = u[:, w <= 1e-10 * max(1.0, float(w[-1]))]
    return AlgebraBasis(d, [linalg.unvec(cols[:, i], (d, d)) for i in range(cols.shape[1])])


def center(a):
    """The abelian algebra a intersected with its commutant."""
    return intersect(a, commutant(a))


def join(a, b):
    """The algebra generated by the union of ``a`` and ``b``."""
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("algebras live in different ambient dimensions")
    return generate_algebra(a.basis + b.basis, a.ambient_dim)


def intersect(a, b, tol=1e-9):
    """Intersection of the two spans by the principal-angle method.

    Directions whose principal cosine reaches 1 - tol are kept; for algebra
    inputs the result is again an algebra.
    """
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("algebras live in different ambient dimensions")
    if a.dim == 0 or b.dim == 0:
        return AlgebraBasis(a.ambient_dim, [])
    m = a._rows.conj() @ b._rows.T
    u, s, _ = np.linalg.svd(m)
    k = int(np.count_nonzero(s >= 1.0 - tol))
    rows = u[:, :k].T @ a._rows
    d = a.ambient_dim
    return AlgebraBasis(d, [linalg.unvec(r, (d, d)) for r in rows])


def contains(a, x, tol=1e-8):
    """Whether the matrix ``x`` lies in the span of ``a`` (absolute residual)."""
    v = linalg.vec(x)
    if v.size != a.ambient_dim**2:
        raise ValueError("matrix dimension does not match the ambient algebra")
    coeff = a._rows.conj() @ v
    return float(np.linalg.norm(v - a._rows.T @ coeff)) <= tol


def equal_spans(a, b, tol=1e-7):
    """Whether two algebras have the same linear span (principal angles)."""
    if a.ambient_dim != b.ambient_dim or a.dim != b.dim:
        return False
    if a.dim == 0:
        return True
    s = np.linalg.svd(a._rows.conj() @ b._rows.T, compute_uv=False)
    return float(s[-1]) >= 1.0 - tol


def relative_commutant(b, ambient, tol=1e-8):
    """Everything in ``ambient`` commuting with all of ``b``; needs b inside ambient."""
    for m in b.basis:
        if not contains(ambient, m, tol):
            raise ValueError("b is not contained in the ambient algebra")
    return intersect(commutant(b), ambient)


def _cluster_eigenvalues(w, tol, guard=10.0):
    """Group a sorted eigenvalue array into clusters separated by > tol.

    Raises :class:`DegenerateSplitError` when two adjacent clusters are
    closer than ``guard`` times the clustering tolerance, since the grouping
    would then depend on the tolerance itself.
    """
    gaps = np.diff(w)
    splits = np.nonzero(gaps > tol)[0]
    clusters = np.split(np.arange(w.size), splits + 1)
    for left, right in zip(clusters[:-1], clusters[1:]):
        if w[right[0]] - w[left[-1]] < guard * tol:
            raise DegenerateSplitError(
                f"eigenvalue clusters separated by only "
                f"{w[right[0]] - w[left[-1]]:.2e} (tolerance {tol:.0e})"
            )
    return clusters


def minimal_central_projectors(a, seed=DEFAULT_SEED, cluster_tol=1e-8):
    """Mutually orthogonal minimal projectors of the center, summing to 1.

    A random Hermitian element of the center (seeded PRNG, seed recorded by
    the caller) is diagonalized and its eigenvalues clustered at the given
    tolerance; each cluster's spectral projector is one superselection
    sector. Ordering: descending rank, ties broken by the trace against
    diag(0..d-1).
    """
    z = center(a)
    rng = np.random.default_rng(seed)
    coeff = rng.standard_normal(z.dim) + 1j * rng.standard_normal(z.dim)
    m = sum(c * b for c, b in zip(coeff, z.basis))
    m = (m + m.conj().T) / 2
    w, u = np.linalg.eigh(m)
    clusters = _cluster_eigenvalues(w, cluster_tol)
    projs = [u[:, idx] @ u[:, idx].conj().T for idx in clusters]
    ref = np.arange(a.ambient_dim)
    projs.sort(key=lambda p: (-round(float(np.trace(p).real)), float((np.diag(p).real * ref).sum())))
    return projs


@dataclass
class Sector:
    projector: np.ndarray
    left_dim: int
    right_dim: int
    isometry: np.ndarray


@dataclass
class BlockStructure:
    ambient_dim: int
    sectors: list
    seed: int


def block_structure(a, seed=DEFAULT_SEED):
    """Factor each central sector of ``a`` as (left matrix algebra) (x) 1.

    For each minimal central projector P_i, returns an isometry U_i with
    U_i U_i^dag = 1 and U_i^dag U_i = P_i such that U_i A U_i^dag has the
    form A_i (x) 1_{m_i} for every A in the algebra. The right-factor frame
    is aligned across eigenspaces of a generic commutant element by polar
    decomposition, which keeps the tensor alignment exact up to rounding.
    """
    d = a.ambient_dim
    projs = minimal_central_projectors(a, seed)
    comm = commutant(a)
    sectors = []
    for si, p in enumerate(projs):
        w, u = np.linalg.eigh(p)
        q = u[:, w > 0.5]
        r = q.shape[1]
        c_rows = linalg.orthonormal_rows(
            np.stack([linalg.vec(q.conj().T @ m @ q) for m in comm.basis])
        )
        a_rows = linalg.orthonormal_rows(
            np.stack([linalg.vec(q.conj().T @ m @ q) for m in a.basis])
        )
        m_dim = isqrt(c_rows.shape[0])
        n_dim = isqrt(a_rows.shape[0])
        if (
            m_dim * m_dim != c_rows.shape[0]
            or n_dim * n_dim != a_rows.shape[0]
            or n_dim * m_dim != r
        ):
            raise ValueError(
                "sector does not factor; the input is not a dagger-algebra"
            )
        c_mats = [linalg.unvec(row, (r, r)) for row in c_rows]
        iso = _sector_isometry(c_mats, r, n_dim, m_dim, seed, si)
        u_i = iso.conj().T @ q.conj().T
        _check_factorization(a, u_i, n_dim, m_dim)
        sectors.append(Sector(p, n_dim, m_dim, u_i))
    return BlockStructure(d, sectors, seed)


def _sector_isometry(c_mats, r, n_dim, m_dim, seed, sector_index):
    """Columns of the change of basis aligning one sector as left (x) right.

    Draws a generic Hermitian commutant element whose eigenspaces are the
    right-factor levels, then transports the first eigenspace's basis to the
    others with a second generic commutant element. Column (j*m + k) holds
    the j-th left vector in the k-th right level.
    """
    for attempt in range(8):
        rng = np.random.default_rng([seed, sector_index, attempt])
        coeff = rng.standard_normal(len(c_mats)) + 1j * rng.standard_normal(len(c_mats))
        z = sum(c * m for c, m in zip(coeff, c_mats))
        z = (z + z.conj().T) / 2
        w, u = np.linalg.eigh(z)
        try:
            clusters = _cluster_eigenvalues(w, 1e-8)
        except DegenerateSplitError:
            continue
        if len(clusters) != m_dim or any(len(c) != n_dim for c in clusters):
            continue
        v0 = u[:, clusters[0]]
        coeff2 = rng.standard_normal(len(c_mats)) + 1j * rng.standard_normal(len(c_mats))
        t = sum(c * m for c, m in zip(coeff2, c_mats))
        mat = np.zeros((r, r), dtype=complex)
        ok = True
        for k, idx in enumerate(clusters):
            if k == 0:
                sk = v0
            else:
                bk = u[:, idx] @ (u[:, idx].conj().T @ (t @ v0))
                g = bk.conj().T @ bk
                w2, u2 = np.linalg.eigh(g)
                if float(w2[0]) <= 1e-8 * max(1.0, float(w2[-1])):
                    ok = False
                    break
                sk = bk @ ((u2 / np.sqrt(w2)) @ u2.conj().T)
            mat[:, k::m_dim] = sk
        if ok:
            return mat
    raise DegenerateSplitError(
        "could not split a sector into left and right factors after 8 draws"
    )


def _check_factorization(a, u_i, n_dim, m_dim):
    worst = 0.0
    for b in a.basis:
        conj = u_i @ b @ u_i.conj().T
        left = linalg.partial_trace(conj, [n_dim, m_dim], keep=[0]) / m_dim
        worst = max(worst, float(np.linalg.norm(conj - np.kron(left, np.eye(m_dim)))))
    if worst > 1e-8:
        raise ValueError(
            f"sector factorization residual {worst:.2e}; the input is not a "
            f"dagger-algebra"
        )


def conditional_expectation(a, seed=DEFAULT_SEED):
    """The Hilbert-Schmidt orthogonal projection onto ``a`` as a channel.

    On each sector the map acts as identity on the left factor and the
    normalized trace on the right factor, which gives explicit Kraus
    operators U_i^dag (1 (x) |j><k|) U_i / sqrt(m_i).
    """
    bs = block_structure(a, seed)
    ops = []
    for sec in bs.sectors:
        n, m = sec.left_dim, sec.right_dim
        eye = np.eye(n)
        for j in range(m):
            for k in range(m):
                unit = np.zeros((m, m), dtype=complex)
                unit[j, k] = 1.0
                ops.append(
                    sec.isometry.conj().T @ np.kron(eye, unit) @ sec.isometry / np.sqrt(m)
                )
    return Channel(ops)
