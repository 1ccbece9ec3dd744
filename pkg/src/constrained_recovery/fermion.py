"""Fermionic systems under the parity superselection rule.

Majorana generators are realized on qubits through the Jordan-Wigner
transformation, with ``w[2j-1] = Z^(j-1) Y_j`` and ``w[2j] = Z^(j-1) X_j``
in 1-based indexing.  On one mode this gives ``w1 = Y`` and ``w2 = X``,
and the all-mode parity operator is the product of the ``Z_j``, so the
Fock vacuum ``|0...0>`` always carries parity +1.

Monomials in the generators are normalized to Hermitian involutions by
the phase ``i**(s*(s-1)/2)`` on an ascending product of ``s`` generators.
The physical (parity-even) observables of a region form a *-subalgebra
spanned by the even-degree monomials, and channels compatible with the
superselection rule admit Kraus representations built from operators of
definite parity; :func:`definite_parity_split` extracts that form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import linalg
from .algebra import AlgebraBasis
from .channels import Channel
from .recovery import Code

__all__ = [
    "FermionSystem",
    "ParityData",
    "ParitySplit",
    "MajoranaRingScenario",
    "majorana",
    "majorana_monomial",
    "parity_operator",
    "physical_algebra",
    "definite_parity_split",
    "majorana_ring",
    "geometric_noise",
]

_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def _site_operator(op, site, n_modes):
    """Tensor ``op`` at ``site`` (0-based) with Z's before and 1's after."""
    mat = np.ones((1, 1), dtype=complex)
    for j in range(n_modes):
        if j < site:
            mat = np.kron(mat, _Z)
        elif j == site:
            mat = np.kron(mat, op)
        else:
            mat = np.kron(mat, np.eye(2))
    return mat


class FermionSystem:
    """A register of fermionic modes with cached Majorana generators.

    Parameters
    ----------
    n_modes:
        Number of fermionic modes.  The Hilbert space dimension is
        ``2**n_modes`` and there are ``2*n_modes`` Majorana generators.
    """

    def __init__(self, n_modes):
        if n_modes < 1:
            raise ValueError("need at least one mode")
        self.n_modes = int(n_modes)
        self.dim = 2**self.n_modes
        majoranas = []
        for j in range(self.n_modes):
            majoranas.append(_site_operator(_Y, j, self.n_modes))
            majoranas.append(_site_operator(_X, j, self.n_modes))
        self.majoranas = majoranas
        self._check_relations()

    def _check_relations(self):
        worst = 0.0
        eye2 = 2.0 * np.eye(self.dim)
        for a in range(len(self.majoranas)):
            wa = self.majoranas[a]
            for b in range(a, len(self.majoranas)):
                wb = self.majoranas[b]
                anti = wa @ wb + wb @ wa
                target = eye2 if a == b else 0.0
                worst = max(worst, float(np.linalg.norm(anti - target)))
        if worst > 1e-10:
            raise RuntimeError(
                f"Majorana anticommutation relations violated by {worst:.2e}"
            )

    def __repr__(self):
        return f"FermionSystem(n_modes={self.n_modes})"


def majorana(system, index):
    """Return the Majorana generator ``w_index`` (1-based index)."""
    if not 1 <= index <= 2 * system.n_modes:
        raise IndexError(
            f"Majorana index {index} out of range 1..{2 * system.n_modes}"
        )
    return system.majoranas[index - 1]


def majorana_monomial(system, indices):
    """Hermitian unit monomial in the Majorana generators.

    Computes ``i**(s*(s-1)/2) * w_{k_1} ... w_{k_s}`` with the indices in
    ascending order, which is Hermitian and squares to the identity.  The
    empty monomial is the identity.
    """
    indices = tuple(indices)
    if len(set(indices)) != len(indices):
        raise ValueError(f"repeated Majorana index in {indices}")
    order = sorted(indices)
    mat = np.eye(system.dim, dtype=complex)
    for k in order:
        mat = mat @ majorana(system, k)
    s = len(order)
    return (1j ** ((s * (s - 1) // 2) % 4)) * mat


@dataclass
class ParityData:
    """Parity operator of a region together with its two eigenprojectors."""

    region: tuple
    c: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray


def parity_operator(system, region):
    """Parity (charge) operator of a set of Majorana indices.

    The region must contain an even number of indices so that the
    operator is parity-even itself.  For a union of whole modes the
    result is the product of the corresponding ``Z_j``, hence +1 on the
    Fock vacuum.
    """
    region = tuple(sorted(set(region)))
    if len(region) % 2 != 0:
        raise ValueError("parity operator needs an even number of indices")
    c = majorana_monomial(system, region)
    eye = np.eye(system.dim)
    return ParityData(
        region=region,
        c=c,
        p_plus=(eye + c) / 2.0,
        p_minus=(eye - c) / 2.0,
    )


def _mode_indices(modes):
    out = []
    for m in modes:
        out.extend((2 * m - 1, 2 * m))
    return out


def physical_algebra(system, majoranas=None, *, modes=None):
    """Algebra of parity-even observables supported on a region.

    The region is given either as a set of Majorana indices or as a set
    of mode indices (keyword ``modes``); a mode contributes both of its
    Majorana generators.  The returned basis consists of the even-degree
    Hermitian monomials divided by ``sqrt(dim)``, which is already
    orthonormal in the Hilbert-Schmidt inner product.  A region of ``r``
    Majorana indices yields dimension ``2**(r-1)`` (or 1 when empty).
    """
    if (majoranas is None) == (modes is None):
        raise ValueError("give exactly one of majoranas= or modes=")
    if modes is not None:
        majoranas = _mode_indices(modes)
    region = tuple(sorted(set(majoranas)))
    for k in region:
        if not 1 <= k <= 2 * system.n_modes:
            raise IndexError(f"Majorana index {k} out of range")
    scale = 1.0 / np.sqrt(system.dim)
    basis = []
    for size in range(0, len(region) + 1, 2):
        for subset in itertools.combinations(region, size):
            basis.append(scale * majorana_monomial(system, subset))
    return AlgebraBasis(system.dim, basis)


@dataclass
class ParitySplit:
    """Kraus operators of a channel regrouped by definite parity."""

    kraus_even: list
    kraus_odd: list
    even: Channel | None
    odd: Channel | None


def definite_parity_split(channel, c, tol=1e-12):
    """Split a channel into parity-preserving and parity-flipping parts.

    Given Kraus operators ``E`` of ``channel`` and a parity operator
    ``c``, forms the definite-parity combinations ``(E + cEc)/(2*sqrt(2))``
    and ``(cE + Ec)/(2*sqrt(2))`` (even) and the corresponding differences
    (odd), dropping combinations of norm below ``tol``.  The two parts sum
    to ``Q N Q'`` with ``Q`` the parity-dephasing channel applied on both
    sides, so they reconstruct ``Q N`` exactly when the channel is
    compatible with the superselection rule.

    Returns a :class:`ParitySplit`; a side with no surviving operators
    has ``None`` in its channel slot.
    """
    c = np.asarray(c, dtype=complex)
    d = c.shape[0]
    if np.linalg.norm(c - c.conj().T) > 1e-10:
        raise ValueError("parity operator must be Hermitian")
    if np.linalg.norm(c @ c - np.eye(d)) > 1e-10:
        raise ValueError("parity operator must square to the identity")
    scale = 1.0 / (2.0 * np.sqrt(2.0))
    even, odd = [], []
    for e in channel.kraus:
        cec = c @ e @ c
        ce = c @ e
        ec = e @ c
        for op in ((e + cec) * scale, (ce + ec) * scale):
            if np.linalg.norm(op) > tol:
                even.append(op)
        for op in ((e - cec) * scale, (ce - ec) * scale):
            if np.linalg.norm(op) > tol:
                odd.append(op)
    return ParitySplit(
        kraus_even=even,
        kraus_odd=odd,
        even=Channel(even, check=False) if even else None,
        odd=Channel(odd, check=False) if odd else None,
    )


@dataclass
class MajoranaRingScenario:
    """A stabilizer encoding on a ring of Majorana modes.

    The unpaired generators carry the logical degrees of freedom; each
    pair in ``pairing`` contributes a stabilizer ``-i w_p w_q`` whose
    joint +1 eigenspace is the code space.  ``intervals`` lists the runs
    of paired indices between consecutive unpaired ones (closed ranges on
    the ring), and ``parity_sign`` records the sign in the logical parity
    relation ``W^dag C W = sign * C_logical``.
    """

    system: FermionSystem
    unpaired: tuple
    pairing: tuple
    intervals: tuple
    code: Code
    logical_system: FermionSystem
    parity_sign: int
    noise: Channel | None = None


def _ring_intervals(unpaired, n_indices):
    """Closed intervals of paired indices between consecutive unpaired ones."""
    marks = sorted(unpaired)
    intervals = []
    for a, b in zip(marks, marks[1:] + [marks[0] + n_indices]):
        run = tuple((k - 1) % n_indices + 1 for k in range(a + 1, b))
        intervals.append(run)
    return tuple(intervals)


def majorana_ring(system, unpaired, pairing, noise=None):
    """Build the stabilizer code of a pairing on the Majorana ring.

    Parameters
    ----------
    system:
        The ambient :class:`FermionSystem` with ``2*n_modes`` generators.
    unpaired:
        Ordered Majorana indices carrying the logical modes; must have
        even length ``2k``.
    pairing:
        Disjoint pairs ``(p, q)`` covering the remaining indices; each
        contributes the stabilizer ``-i w_p w_q``.
    noise:
        Optional channel stored on the scenario for later analysis.

    The encoding isometry spans the joint +1 eigenspace of the
    stabilizers and is aligned so that ``w_unpaired[i] W = W wtilde_i``
    for the Jordan-Wigner generators ``wtilde`` of a fresh ``k``-mode
    logical system.
    """
    n_indices = 2 * system.n_modes
    unpaired = tuple(int(k) for k in unpaired)
    pairing = tuple((int(p), int(q)) for p, q in pairing)
    claimed = list(unpaired) + [k for pq in pairing for k in pq]
    if sorted(claimed) != list(range(1, n_indices + 1)):
        raise ValueError(
            "unpaired indices and pairing must partition 1..2*n_modes"
        )
    if len(unpaired) % 2 != 0:
        raise ValueError("number of unpaired Majorana indices must be even")
    k_modes = len(unpaired) // 2
    if k_modes == 0:
        raise ValueError("need at least one unpaired pair of indices")

    eye = np.eye(system.dim)
    proj = eye
    for p, q in pairing:
        stab = -1j * majorana(system, p) @ majorana(system, q)
        proj = proj @ (eye + stab) / 2.0
    w_vals, w_vecs = np.linalg.eigh((proj + proj.conj().T) / 2.0)
    cols = w_vals > 0.5
    if int(np.count_nonzero(cols)) != 2**k_modes:
        raise RuntimeError(
            "stabilizer eigenspace has unexpected dimension "
            f"{int(np.count_nonzero(cols))}"
        )
    w0 = w_vecs[:, cols]

    logical = FermionSystem(k_modes)
    dl = logical.dim
    restricted = [
        w0.conj().T @ majorana(system, k) @ w0 for k in unpaired
    ]
    rows = []
    for l_op, w_op in zip(restricted, logical.majoranas):
        rows.append(np.kron(l_op, np.eye(dl)) - np.kron(np.eye(dl), w_op.T))
    null = linalg.null_space(np.vstack(rows))
    if null.shape[0] == 0:
        raise RuntimeError("logical Majorana identification has no solution")
    u = linalg.unvec(null[0], (dl, dl))
    gram = u.conj().T @ u
    u = u / np.sqrt(float(np.trace(gram).real) / dl)
    if np.linalg.norm(u.conj().T @ u - np.eye(dl)) > 1e-8:
        raise RuntimeError("logical Majorana intertwiner is not unitary")
    pivot = np.unravel_index(np.argmax(np.abs(u)), u.shape)
    u = u * (u[pivot].conj() / abs(u[pivot]))
    isometry = w0 @ u

    code = Code(
        logical_dim=dl, physical_dim=system.dim, isometry=isometry
    )
    c_all = parity_operator(system, range(1, n_indices + 1)).c
    if np.linalg.norm(c_all @ code.projector - code.projector @ c_all) > 1e-9:
        raise RuntimeError("code projector does not commute with parity")
    c_logical = parity_operator(logical, range(1, 2 * k_modes + 1)).c
    restricted_parity = isometry.conj().T @ c_all @ isometry
    if np.linalg.norm(restricted_parity - c_logical) <= 1e-8:
        sign = 1
    elif np.linalg.norm(restricted_parity + c_logical) <= 1e-8:
        sign = -1
    else:
        raise RuntimeError("restricted parity is not proportional to the "
                           "logical parity")
    return MajoranaRingScenario(
        system=system,
        unpaired=unpaired,
        pairing=pairing,
        intervals=_ring_intervals(unpaired, n_indices),
        code=code,
        logical_system=logical,
        parity_sign=sign,
        noise=noise,
    )


def _arc_monomial_supports(n_indices, max_support):
    """Even-size index sets inside some contiguous ring arc of given length."""
    supports = set()
    for start in range(n_indices):
        window = [(start + t) % n_indices + 1 for t in range(max_support)]
        for size in range(2, max_support + 1, 2):
            for subset in itertools.combinations(sorted(window), size):
                supports.add(subset)
    return sorted(supports, key=lambda s: (len(s), s))


def geometric_noise(system, max_support, weights=None, *, monomials=None,
                    allow_odd=False):
    """Mixture of Majorana monomial unitaries local on the ring.

    By default the Kraus set is the identity plus every even Hermitian
    monomial whose support fits inside a contiguous arc of at most
    ``max_support`` ring positions; each operator is weighted by
    ``sqrt(w_i / sum(w))``, with uniform weights when none are given.
    Every monomial is unitary, so the result is trace preserving by
    construction.

    Passing ``monomials`` (a list of index tuples, empty tuple for the
    identity) overrides the arc enumeration.  Odd monomials violate the
    superselection rule and are rejected unless ``allow_odd`` is set.
    """
    n_indices = 2 * system.n_modes
    if monomials is None:
        if max_support < 2:
            raise ValueError("max_support must be at least 2")
        supports = [()] + _arc_monomial_supports(
            n_indices, min(max_support, n_indices)
        )
    else:
        supports = []
        for indices in monomials:
            indices = tuple(sorted(int(k) for k in indices))
            if len(set(indices)) != len(indices):
                raise ValueError(f"repeated index in monomial {indices}")
            for k in indices:
                if not 1 <= k <= n_indices:
                    raise IndexError(f"Majorana index {k} out of range")
            if len(indices) % 2 != 0 and not allow_odd:
                raise ValueError(
                    f"odd monomial {indices} breaks the parity rule; "
                    "pass allow_odd=True to force it"
                )
            supports.append(indices)
        if not supports:
            raise ValueError("monomial list is empty")
    if weights is None:
        weights = np.ones(len(supports))
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(supports),):
        raise ValueError(
            f"need {len(supports)} weights, got shape {weights.shape}"
        )
    if np.any(weights < 0.0):
        raise ValueError("weights must be nonnegative")
    total = float(weights.sum())
    if total <= 0.0:
        raise ValueError("weights must not all vanish")
    kraus = [
        np.sqrt(w / total) * majorana_monomial(system, s)
        for s, w in zip(supports, weights)
        if w > 0.0
    ]
    return Channel(kraus)
