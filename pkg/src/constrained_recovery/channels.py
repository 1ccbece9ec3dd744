"""CPTP channel calculus on dense Kraus operators.

Conventions used throughout:

* ``compose(a, b)`` applies ``b`` first, so it is the map "a after b".
* Choi matrices live on out (x) in with the row-major vec convention of
  :mod:`.linalg`, J = sum_k vec(E_k) vec(E_k)^dag.
* The Stinespring isometry is V = sum_i E_i (x) |i>, of shape
  (out_dim * n_kraus, in_dim), with the environment as the second (fast)
  tensor factor; the channel is Tr_2(V rho V^dag) and its complement is
  Tr_1(V rho V^dag).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg

__all__ = [
    "Channel",
    "ChannelDistance",
    "ValidationReport",
    "PhysicalityReport",
    "FixesReport",
    "LocalityReport",
    "EquivalenceReport",
    "identity_channel",
    "kraus_from_choi",
    "channel_from_choi",
    "validate",
    "adjoint_apply",
    "compose",
    "tensor_channels",
    "complementary",
    "local_complementary",
    "local_complement_defect",
    "equivalent_complements",
    "distance",
    "is_physical",
    "fixes_algebra",
    "maps_into",
    "is_local",
    "entanglement_fidelity",
]


class Channel:
    """A completely positive trace-preserving map stored as Kraus operators.

    The Choi matrix and the Stinespring isometry are computed at construction
    and cached; instances are treated as immutable afterwards, so concurrent
    reads are safe. Construction applies a loose trace-preservation guard
    (residual above 1e-6 raises); :func:`validate` performs the strict
    checks. Pass ``check=False`` for completely positive pieces that are not
    trace preserving on their own, such as parity-split halves.
    """

    def __init__(self, kraus, check=True):
        ops = [np.asarray(e, dtype=complex) for e in kraus]
        if not ops:
            raise ValueError("need at least one Kraus operator")
        shape = ops[0].shape
        if len(shape) != 2 or any(e.shape != shape for e in ops):
            raise ValueError("Kraus operators must share a single 2d shape")
        self.kraus = ops
        self.out_dim, self.in_dim = int(shape[0]), int(shape[1])
        self._stack = np.stack(ops)
        ksum = np.einsum("kba,kbc->ac", self._stack.conj(), self._stack)
        self.tp_residual = float(np.linalg.norm(ksum - np.eye(self.in_dim), 2))
        if check and self.tp_residual > 1e-6:
            raise ValueError(
                f"Kraus operators are not trace preserving "
                f"(residual {self.tp_residual:.2e}); pass check=False for a "
                f"completely positive non-channel piece"
            )
        vecs = self._stack.reshape(len(ops), -1)
        self.choi = vecs.T @ vecs.conj()
        self.stinespring = self._stack.transpose(1, 0, 2).reshape(
            self.out_dim * len(ops), self.in_dim
        )

    @property
    def n_kraus(self):
        return len(self.kraus)

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.in_dim, self.in_dim):
            raise ValueError(
                f"state has shape {rho.shape}, expected "
                f"({self.in_dim}, {self.in_dim})"
            )
        return np.einsum("kab,bc,kdc->ad", self._stack, rho, self._stack.conj())

    def __repr__(self):
        return (
            f"Channel(in_dim={self.in_dim}, out_dim={self.out_dim}, "
            f"n_kraus={self.n_kraus})"
        )


def identity_channel(dim):
    """The identity channel on a ``dim``-dimensional system."""
    return Channel([np.eye(dim)])


@dataclass
class ValidationReport:
    tp_residual: float
    choi_min_eig: float
    isometry_residual: float
    tol: float
    valid: bool

    def __bool__(self):
        return self.valid


def validate(c, tol=1e-9):
    """Check the channel invariants and report their residuals.

    Trace preservation is measured as the spectral norm of sum E^dag E - 1,
    Choi positivity as the minimum eigenvalue, and the Stinespring relation
    as the spectral norm of V^dag V - 1.
    """
    eye = np.eye(c.in_dim)
    ksum = adjoint_apply(c, np.eye(c.out_dim))
    tp = float(np.linalg.norm(ksum - eye, 2))
    w = np.linalg.eigvalsh((c.choi + c.choi.conj().T) / 2)
    vres = float(np.linalg.norm(c.stinespring.conj().T @ c.stinespring - eye, 2))
    ok = tp <= tol and float(w[0]) >= -tol and vres <= tol
    return ValidationReport(tp, float(w[0]), vres, tol, ok)


def adjoint_apply(c, x):
    """Apply the adjoint (Heisenberg-picture) map of ``c`` to an observable."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (c.out_dim, c.out_dim):
        raise ValueError(
            f"observable has shape {x.shape}, expected "
            f"({c.out_dim}, {c.out_dim})"
        )
    return np.einsum("kba,bc,kcd->ad", c._stack.conj(), x, c._stack)


def kraus_from_choi(choi, out_dim, in_dim, cutoff=1e-12):
    """Kraus operators of a CP map recovered from its Choi matrix.

    Eigenvectors with eigenvalue above ``cutoff`` (relative to the largest,
    floored at an absolute scale of 1) become Kraus operators, largest first.
    A numerically zero Choi matrix yields a single zero operator.
    """
    choi = np.asarray(choi, dtype=complex)
    w, u = np.linalg.eigh((choi + choi.conj().T) / 2)
    keep = w > cutoff * max(1.0, float(w[-1]))
    if not np.any(keep):
        return [np.zeros((out_dim, in_dim), dtype=complex)]
    ops = []
    for i in reversed(np.nonzero(keep)[0]):
        ops.append(np.sqrt(w[i]) * linalg.unvec(u[:, i], (out_dim, in_dim)))
    return ops


def channel_from_choi(choi, out_dim, in_dim, cutoff=1e-12, renormalize=False):
    """Build a channel from a Choi matrix.

    With ``renormalize`` every Kraus operator is right-multiplied by
    K^(-1/2), K = sum E^dag E, restoring exact trace preservation; this is
    the standard fix for process matrices extracted from an SDP solve, which
    satisfy the trace condition only up to solver tolerance.
    """
    ops = kraus_from_choi(choi, out_dim, in_dim, cutoff)
    if renormalize:
        stack = np.stack(ops)
        ksum = np.einsum("kba,kbc->ac", stack.conj(), stack)
        w, u = np.linalg.eigh(ksum)
        if float(w[0]) <= 1e-12:
            raise ValueError("cannot renormalize: sum E^dag E is singular")
        inv_root = (u * (1.0 / np.sqrt(w))) @ u.conj().T
        ops = [e @ inv_root for e in ops]
    return Channel(ops, check=False)


def compose(a, b, reduce=True):
    """The composition "a after b", with Kraus set {A_i B_j}.

    The product family is ordered with the a-index outermost. When ``reduce``
    is set and the family exceeds out_dim * in_dim operators, an equivalent
    minimal Kraus set is extracted from the Choi matrix; pass
    ``reduce=False`` to keep the full product family (the local-complement
    construction relies on its index structure).
    """
    if a.in_dim != b.out_dim:
        raise ValueError(
            f"cannot compose: left input dim {a.in_dim} != right output "
            f"dim {b.out_dim}"
        )
    ops = [ea @ eb for ea in a.kraus for eb in b.kraus]
    out = Channel(ops, check=False)
    if reduce and len(ops) > a.out_dim * b.in_dim:
        out = channel_from_choi(out.choi, a.out_dim, b.in_dim)
    return out


def tensor_channels(a, b):
    """The product channel acting as ``a`` on the first factor and ``b`` on the second."""
    ops = [np.kron(ea, eb) for ea in a.kraus for eb in b.kraus]
    return Channel(ops, check=False)


def complementary(c):
    """The environment-side channel of ``c``, in canonical Gram form.

    With Kraus operators E_i the complement sends rho to the n_kraus-sized
    matrix with entries Tr(rho E_j^dag E_i) at (i, j), which equals the
    environment marginal Tr_1(V rho V^dag) of the cached dilation. Its a-th
    Kraus operator collects the a-th rows of all the E_i.
    """
    ops = [c._stack[:, a, :] for a in range(c.out_dim)]
    return Channel(ops, check=False)


def local_complementary(c, b):
    """Complement of ``c`` that also counts the part of the output hidden
    from the fixed algebra ``b`` as environment.

    Built as the ordinary complement of (conditional expectation onto the
    commutant of ``b``) composed after ``c``. The composition keeps the full
    product Kraus family, so the output space factors as the expectation's
    environment tensor the environment of ``c`` (in that order).
    """
    from . import algebra as algebra_mod

    if c.out_dim != b.ambient_dim:
        raise ValueError(
            f"algebra ambient dim {b.ambient_dim} != channel output dim {c.out_dim}"
        )
    p = algebra_mod.conditional_expectation(algebra_mod.commutant(b))
    return complementary(compose(p, c, reduce=False))


def local_complement_defect(c, b, lc=None):
    """Worst-case residual between the constructed local complement and its
    defining property.

    The defining property of the local complement lc of ``c`` for ``b``: for
    every B in ``b`` and every environment observable E, applying the adjoint
    of lc to (a preimage of B) tensor E equals V^dag (B (x) E) V with V the
    Stinespring isometry of ``c``. The preimage lives on the expectation's
    environment factor and is obtained by solving the linear map G with
    G(|m><n|) = F_m^dag F_n, F_m the Kraus operators of the conditional
    expectation onto the commutant of ``b``; G is onto ``b``, so the solve
    residual is part of the defect. Returns the largest Frobenius residual
    over an orthonormal basis of ``b`` and all environment matrix units.
    """
    from . import algebra as algebra_mod

    if lc is None:
        lc = local_complementary(c, b)
    p = algebra_mod.conditional_expectation(algebra_mod.commutant(b))
    k_p = p.n_kraus
    k_n = c.n_kraus
    d = c.out_dim
    f_stack = p._stack
    # column m*k_p + n of ghat is vec(F_m^dag F_n)
    prods = np.einsum("mba,nbc->mnac", f_stack.conj(), f_stack)
    ghat = prods.reshape(k_p * k_p, d * d).T
    ghat_pinv = np.linalg.pinv(ghat, rcond=1e-10)

    v4 = c.stinespring.reshape(d, k_n, c.in_dim)
    g4 = lc._stack.reshape(d, k_p, k_n, c.in_dim)
    worst = 0.0
    for bop in b.basis:
        x = ghat_pinv @ linalg.vec(bop)
        solve_res = float(np.linalg.norm(ghat @ x - linalg.vec(bop)))
        x = linalg.unvec(x, (k_p, k_p))
        lhs = np.einsum("aks,ab,blt->klst", v4.conj(), bop, v4)
        rhs = np.einsum("amks,mn,anlt->klst", g4.conj(), x, g4)
        worst = max(worst, float(np.linalg.norm(lhs - rhs)), solve_res)
    return worst


@dataclass
class ChannelDistance:
    choi_frobenius: float
    fidelity_lower_bound: Optional[float] = None


def distance(a, b, with_fidelity=False):
    """Frobenius distance between Choi matrices; zero iff equal superoperators.

    With ``with_fidelity`` the entanglement fidelity at the maximally mixed
    input is attached as a closeness indicator.
    """
    if (a.in_dim, a.out_dim) != (b.in_dim, b.out_dim):
        raise ValueError("channels must share input and output dimensions")
    d = float(np.linalg.norm(a.choi - b.choi))
    f = None
    if with_fidelity:
        f = entanglement_fidelity(a, b, np.eye(a.in_dim) / a.in_dim)
    return ChannelDistance(d, f)


@dataclass
class PhysicalityReport:
    physical: bool
    residual: float
    tol: float

    def __bool__(self):
        return self.physical


def is_physical(n, p, q, tol=1e-8):
    """Whether ``n`` acts on restricted observables only through restricted
    states: q n p = q n as superoperators.

    ``p`` and ``q`` must be idempotent channels (conditional expectations);
    idempotence is verified before the comparison. The residual is the
    Choi-Frobenius distance between the two sides.
    """
    for name, e in (("p", p), ("q", q)):
        if distance(compose(e, e), e).choi_frobenius > 1e-8:
            raise ValueError(f"{name} is not idempotent")
    lhs = compose(q, compose(n, p))
    rhs = compose(q, n)
    res = distance(lhs, rhs).choi_frobenius
    return PhysicalityReport(res <= tol, res, tol)


@dataclass
class FixesReport:
    fixes: bool
    adjoint_residual: float
    commutation_residual: float
    tol: float

    def __bool__(self):
        return self.fixes


def fixes_algebra(n, b, tol=1e-8):
    """Whether the adjoint of ``n`` fixes every element of the algebra ``b``.

    Reports the worst adjoint-fixing residual over the basis and, separately,
    the worst commutator of a Kraus operator with a basis element: a
    channel's adjoint fixes a dagger-algebra exactly when all its Kraus
    operators (in any representation) commute with the algebra, so both
    residuals must pass.
    """
    if n.in_dim != n.out_dim:
        raise ValueError("fixing an algebra needs a square channel")
    if n.in_dim != b.ambient_dim:
        raise ValueError(
            f"algebra ambient dim {b.ambient_dim} != channel dim {n.in_dim}"
        )
    adj = 0.0
    comm = 0.0
    for bop in b.basis:
        adj = max(adj, float(np.linalg.norm(adjoint_apply(n, bop) - bop)))
        for e in n.kraus:
            comm = max(comm, float(np.linalg.norm(e @ bop - bop @ e)))
    return FixesReport(adj <= tol and comm <= tol, adj, comm, tol)


def maps_into(n, a, tol=1e-8):
    """Whether the adjoint of ``n`` maps the algebra ``a`` into itself."""
    if n.in_dim != n.out_dim or n.in_dim != a.ambient_dim:
        raise ValueError("dimension mismatch between channel and algebra")
    worst = 0.0
    for aop in a.basis:
        x = adjoint_apply(n, aop)
        proj = np.zeros_like(x)
        for bop in a.basis:
            proj += linalg.hs_inner(bop, x) * bop
        worst = max(worst, float(np.linalg.norm(x - proj)))
    return worst <= tol


@dataclass
class LocalityReport:
    local: bool
    fixes: "FixesReport"
    maps_into_a: bool
    strong: bool
    tol: float

    def __bool__(self):
        return self.local


def is_local(n, a, b, tol=1e-8):
    """Whether ``n`` is local for the pair (a, b): its adjoint maps ``a``
    into itself and fixes ``b``.

    ``b`` must commute with ``a`` elementwise (precondition, raises
    otherwise); the ``strong`` flag marks the case where ``b`` equals the
    full commutant of ``a`` as a span.
    """
    pre = 0.0
    for aop in a.basis:
        for bop in b.basis:
            pre = max(pre, float(np.linalg.norm(aop @ bop - bop @ aop)))
    if pre > tol:
        raise ValueError(
            f"b is not inside the commutant of a (worst commutator {pre:.2e})"
        )
    fx = fixes_algebra(n, b, tol)
    mi = maps_into(n, a, tol)

    from . import algebra as algebra_mod

    strong = algebra_mod.equal_spans(b, algebra_mod.commutant(a))
    return LocalityReport(bool(fx) and mi, fx, mi, strong, tol)


def entanglement_fidelity(n, m, rho, tol=1e-8):
    """Fidelity of the outputs of two channels on a purification of ``rho``.

    The reference factor is internally truncated to the rank of ``rho``
    (the value does not depend on the purification).
    """
    if n.in_dim != m.in_dim or n.out_dim != m.out_dim:
        raise ValueError("channels must share input and output dimensions")
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (n.in_dim, n.in_dim):
        raise ValueError("state dimension does not match channel input")
    if not linalg.is_hermitian(rho, tol=tol):
        raise ValueError("rho is not Hermitian")
    if abs(float(np.trace(rho).real) - 1.0) > tol:
        raise ValueError("rho does not have unit trace")
    w, u = np.linalg.eigh(rho)
    if float(w[0]) < -tol:
        raise ValueError("rho is not positive semidefinite")
    keep = w > 1e-14 * max(1.0, float(w[-1]))
    root = u[:, keep] * np.sqrt(w[keep])

    def lifted(c):
        vecs = np.stack([linalg.vec(e @ root) for e in c.kraus])
        return vecs.T @ vecs.conj()

    return linalg.state_fidelity(lifted(n), lifted(m), tol=tol)


@dataclass
class EquivalenceReport:
    equivalent: bool
    forward_value: float
    backward_value: float
    forward_residual: float
    backward_residual: float
    indeterminate: bool = False

    def __bool__(self):
        return self.equivalent


def equivalent_complements(a, b, tol=1e-6):
    """Whether each channel can be obtained from the other by postprocessing.

    Runs two maximal-fidelity optimizations at the maximally mixed (full
    rank) input; at full rank the fidelity reaches 1 exactly when a
    postprocessing map matches the target everywhere, so both deficits must
    stay within ``tol``. The Choi residuals of the extracted optimizers are
    reported alongside; an SDP that stops short of optimality makes the
    verdict indeterminate.
    """
    from . import recovery

    if a.in_dim != b.in_dim:
        raise ValueError("channels must share the input dimension")
    rho = np.eye(a.in_dim) / a.in_dim

    def one_way(src, dst):
        res = recovery.optimal_recovery_fidelity(
            src, dst, rho, recovery.Unconstrained()
        )
        best = recovery.extract_recovery(res)
        resid = distance(compose(best, src), dst).choi_frobenius
        return res, resid

    fwd, fres = one_way(a, b)
    bwd, bres = one_way(b, a)
    stuck = fwd.status != "optimal" or bwd.status != "optimal"
    equivalent = (not stuck) and (1.0 - fwd.value <= tol) and (
        1.0 - bwd.value <= tol
    )
    return EquivalenceReport(
        equivalent, fwd.value, bwd.value, fres, bres, indeterminate=stuck
    )
