"""Exact correctability checks and optimal recovery fidelities.

The checks decide algebraically whether a noise channel can be reversed
on a code subspace, possibly in the presence of a conserved charge or a
locality structure that restricts which recoveries are allowed.  The
fidelity routines answer the quantitative version of the same question
through semidefinite programming, both directly (optimizing the
recovery map) and on the environment side (optimizing a map between
channel dilations), so the two optimal values can be compared.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import channels as channels_mod
from . import linalg
from . import sdp
from .channels import Channel
from .sdp import FixesAlgebra, Physical, Unconstrained

__all__ = [
    "Code",
    "CorrectabilityReport",
    "FidelityResult",
    "DualityReport",
    "Unconstrained",
    "Physical",
    "FixesAlgebra",
    "kl_check",
    "superselection_kl_check",
    "tensor_local_check",
    "fermion_local_check",
    "optimal_recovery_fidelity",
    "environment_side_fidelity",
    "verify_duality",
    "worst_case_fidelity_seesaw",
    "extract_recovery",
]


@dataclass
class Code:
    """An isometric encoding of a logical space into a physical space."""

    logical_dim: int
    physical_dim: int
    isometry: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.isometry, dtype=complex)
        if w.shape != (self.physical_dim, self.logical_dim):
            raise ValueError(
                f"isometry has shape {w.shape}, expected "
                f"({self.physical_dim}, {self.logical_dim})"
            )
        if np.linalg.norm(w.conj().T @ w - np.eye(self.logical_dim)) > 1e-10:
            raise ValueError("isometry columns are not orthonormal")
        self.isometry = w

    @property
    def projector(self):
        return self.isometry @ self.isometry.conj().T


@dataclass
class CorrectabilityReport:
    """Outcome of an exact correctability check.

    ``verdict`` is "correctable", "not_correctable", or "indeterminate"
    (the last when a structural precondition of the check fails, so the
    algebraic conditions are neither necessary nor sufficient).
    ``residual`` is the Frobenius misfit of the defining conditions and
    ``coefficients`` holds the fitted data (error densities or scalars).
    """

    verdict: str
    residual: float
    coefficients: dict = field(default_factory=dict)
    sufficiency_flags: dict = field(default_factory=dict)

    def __bool__(self):
        return self.verdict == "correctable"


@dataclass
class FidelityResult:
    """An optimal (or heuristic) channel fidelity with its optimizer.

    ``optimizer`` is the process matrix of the optimizing map, on
    ``out_dim (x) in_dim``; ``status`` mirrors the solver ("optimal",
    "max_iter", "infeasible") or reads "heuristic" for see-saw output.
    """

    value: float
    optimizer: np.ndarray
    duality_gap: float
    iterations: int
    constraint_set: str
    status: str
    out_dim: int = 0
    in_dim: int = 0


@dataclass
class DualityReport:
    recovery: FidelityResult
    environment: FidelityResult
    difference: float
    passed: bool
    indeterminate: bool = False

    def __bool__(self):
        return self.passed


def _kraus_list(kraus):
    if isinstance(kraus, Channel):
        return list(kraus.kraus)
    ops = [np.asarray(e, dtype=complex) for e in kraus]
    if not ops:
        raise ValueError("need at least one Kraus operator")
    shape = ops[0].shape
    if len(shape) != 2 or any(e.shape != shape for e in ops):
        raise ValueError("Kraus operators must share a single 2d shape")
    return ops


def _density_conditions(mat, tol):
    """Hermitian part, plus whether it is PSD with unit trace within tol."""
    h = (mat + mat.conj().T) / 2.0
    eigs = np.linalg.eigvalsh(h)
    ok = eigs[0] >= -10 * tol and abs(float(np.trace(h).real) - 1.0) <= 10 * tol
    return h, ok


def kl_check(code, kraus, tol=1e-8):
    """Exact correctability of a Kraus set on a code subspace.

    The code corrects the errors exactly when the compressions
    ``W^dag E_j^dag E_i W`` are all proportional to the identity; the
    proportionality coefficients then form a density matrix.
    """
    ops = _kraus_list(kraus)
    w = code.isometry
    k = code.logical_dim
    if ops[0].shape != (code.physical_dim, code.physical_dim):
        raise ValueError("Kraus operators must act on the physical space")
    lifted = np.stack([e @ w for e in ops])
    gram = np.einsum("jak,ial->jikl", lifted.conj(), lifted)
    sigma = np.einsum("jikk->ij", gram) / k
    ideal = np.einsum("ij,kl->jikl", sigma, np.eye(k))
    residual = float(np.linalg.norm(gram - ideal))
    sigma, sigma_ok = _density_conditions(sigma, tol)
    verdict = "correctable" if residual <= tol and sigma_ok else "not_correctable"
    return CorrectabilityReport(
        verdict=verdict,
        residual=residual,
        coefficients={"sigma": sigma},
        sufficiency_flags={"error_density_valid": sigma_ok},
    )


def _validate_projector_family(projectors, dim, tol=1e-8):
    mats = [np.asarray(p, dtype=complex) for p in projectors]
    if not mats:
        raise ValueError("need at least one projector")
    total = np.zeros((dim, dim), dtype=complex)
    for i, p in enumerate(mats):
        if p.shape != (dim, dim):
            raise ValueError(f"projector {i} has shape {p.shape}, expected "
                             f"({dim}, {dim})")
        if np.linalg.norm(p - p.conj().T) > tol or \
                np.linalg.norm(p @ p - p) > tol:
            raise ValueError(f"projector {i} is not an orthogonal projector")
        for j in range(i):
            if np.linalg.norm(mats[j] @ p) > tol:
                raise ValueError(f"projectors {j} and {i} overlap")
        total += p
    if np.linalg.norm(total - np.eye(dim)) > tol:
        raise ValueError("projectors do not sum to the identity")
    return mats


def superselection_kl_check(code, kraus, projectors, tol=1e-8):
    """Correctability when recoveries must respect a charge decomposition.

    ``projectors`` is a complete orthogonal family of charge sectors.
    The errors are correctable by sector-respecting recoveries exactly
    when ``W^dag E_n^dag P_j E_m W`` is a combination of the compressed
    sector projectors ``W^dag P_i W`` whose coefficient blocks form one
    conditional error density per input sector.  The decomposition of
    the code by sectors (the projectors commuting with the code
    projector) is a structural precondition; when it fails the verdict
    is indeterminate.
    """
    ops = _kraus_list(kraus)
    d = code.physical_dim
    if ops[0].shape != (d, d):
        raise ValueError("Kraus operators must act on the physical space")
    mats = _validate_projector_family(projectors, d)
    w = code.isometry
    k = code.logical_dim
    n_ops = len(ops)
    n_sec = len(mats)

    proj = code.projector
    commute = max(float(np.linalg.norm(p @ proj - proj @ p)) for p in mats)
    projectors_commute = commute <= max(tol, 1e-10) * 10
    fixed_sector = any(
        np.linalg.norm(p @ w - w) <= max(tol, 1e-10) * 10 for p in mats
    )

    q_mats = [w.conj().T @ p @ w for p in mats]
    determined = [float(np.linalg.norm(q)) > 1e-10 for q in q_mats]
    basis = np.stack([linalg.vec(q) for q, keep in zip(q_mats, determined)
                      if keep])
    pinv = np.linalg.pinv(basis.T, rcond=1e-10)

    lifted = np.stack([e @ w for e in ops])
    resid_sq = 0.0
    coeff = np.zeros((n_sec, n_sec, n_ops, n_ops), dtype=complex)
    for j, p in enumerate(mats):
        plift = np.stack([p @ v for v in lifted])
        targets = np.einsum("nak,mal->nmkl", plift.conj(), plift)
        flat = targets.reshape(n_ops * n_ops, k * k)
        c = pinv @ flat.T
        resid_sq += float(np.linalg.norm(basis.T @ c - flat.T) ** 2)
        c = c.T.reshape(n_ops, n_ops, -1)
        slot = 0
        for i in range(n_sec):
            if determined[i]:
                coeff[i, j] = c[:, :, slot]
                slot += 1
    residual = float(np.sqrt(resid_sq))

    densities_ok = True
    for i in range(n_sec):
        if not determined[i]:
            # the code has no weight in this sector; any completion works
            coeff[i] = np.broadcast_to(
                np.eye(n_ops) / (n_sec * n_ops), (n_sec, n_ops, n_ops)
            )
            continue
        total = 0.0
        for j in range(n_sec):
            block, ok = _density_conditions(coeff[i, j], tol)
            coeff[i, j] = block
            if np.linalg.eigvalsh(block)[0] < -10 * tol:
                densities_ok = False
            total += float(np.trace(block).real)
        if abs(total - 1.0) > 10 * tol:
            densities_ok = False

    if not projectors_commute:
        verdict = "indeterminate"
    elif residual > tol or not densities_ok:
        verdict = "not_correctable"
    else:
        verdict = "correctable"
    return CorrectabilityReport(
        verdict=verdict,
        residual=residual,
        coefficients={"sector_densities": coeff},
        sufficiency_flags={
            "projectors_commute_with_code": projectors_commute,
            "fixed_charge_sector": fixed_sector,
            "sector_densities_valid": densities_ok,
        },
    )


def _scalar_fit(rows_fixed, rows_target):
    """Least-squares scalar with rows_target ~ lam * rows_fixed."""
    denom = float(np.vdot(rows_fixed, rows_fixed).real)
    if denom <= 1e-24:
        return 0.0 + 0.0j, float(np.linalg.norm(rows_target))
    lam = np.vdot(rows_fixed, rows_target) / denom
    return lam, float(np.linalg.norm(rows_target - lam * rows_fixed))


def tensor_local_check(code, kraus, dims, tol=1e-8):
    """Correctability against noise on the first tensor factor when the
    recovery may only act there as well.

    ``dims`` is the (d_A, d_B) bipartition of the physical space and the
    Kraus operators act on the first factor.  The condition compares
    ``W^dag (E_i^dag E_j (x) B) W`` with ``lambda_ij W^dag (1 (x) B) W``
    over a basis of the second factor.
    """
    d_a, d_b = (int(x) for x in dims)
    if d_a * d_b != code.physical_dim:
        raise ValueError(
            f"bipartition {d_a} x {d_b} does not match physical dimension "
            f"{code.physical_dim}"
        )
    ops = _kraus_list(kraus)
    if ops[0].shape != (d_a, d_a):
        raise ValueError("Kraus operators must act on the first factor")
    w = code.isometry
    n_ops = len(ops)

    units = np.eye(d_b * d_b, dtype=complex).reshape(d_b * d_b, d_b, d_b)
    fixed = np.stack([
        linalg.vec(w.conj().T @ np.kron(np.eye(d_a), b) @ w) for b in units
    ]).reshape(-1)
    lam = np.zeros((n_ops, n_ops), dtype=complex)
    resid_sq = 0.0
    for i in range(n_ops):
        for j in range(n_ops):
            g = ops[i].conj().T @ ops[j]
            target = np.stack([
                linalg.vec(w.conj().T @ np.kron(g, b) @ w) for b in units
            ]).reshape(-1)
            lam[i, j], res = _scalar_fit(fixed, target)
            resid_sq += res * res
    residual = float(np.sqrt(resid_sq))
    lam, lam_ok = _density_conditions(lam, tol)
    verdict = "correctable" if residual <= tol and lam_ok else "not_correctable"
    return CorrectabilityReport(
        verdict=verdict,
        residual=residual,
        coefficients={"lambda": lam},
        sufficiency_flags={"error_density_valid": lam_ok},
    )


def fermion_local_check(code, kraus, region, tol=1e-8):
    """Correctability of even noise on a Majorana region by recoveries
    confined to the same region.

    The physical space must be a register of fermionic modes (dimension
    a power of two) and every Kraus operator must lie in the even
    algebra of ``region`` (a ValueError otherwise).  The condition
    compares ``W^dag E_i^dag E_j B P W`` with ``lambda W^dag B P W``
    over the relative commutant of the region algebra and both region
    parity sectors ``P``.
    """
    from . import algebra as algebra_mod
    from . import fermion as fermion_mod

    d = code.physical_dim
    n_modes = int(round(np.log2(d)))
    if n_modes < 1 or 2 ** n_modes != d:
        raise ValueError(f"physical dimension {d} is not a power of two")
    system = fermion_mod.FermionSystem(n_modes)
    region = tuple(sorted(set(int(i) for i in region)))
    parity = fermion_mod.parity_operator(system, region)
    ops = _kraus_list(kraus)
    if ops[0].shape != (d, d):
        raise ValueError("Kraus operators must act on the physical space")
    region_algebra = fermion_mod.physical_algebra(system, region)
    for idx, e in enumerate(ops):
        if not algebra_mod.contains(region_algebra, e, tol=1e-8):
            raise ValueError(
                f"Kraus operator {idx} is not in the even algebra of the "
                f"region {region}"
            )

    w = code.isometry
    n_ops = len(ops)
    outside = [i for i in range(1, 2 * n_modes + 1) if i not in region]
    commutant_ops = []
    for size in range(0, len(outside) + 1, 2):
        for subset in combinations(outside, size):
            t = fermion_mod.majorana_monomial(system, subset)
            commutant_ops.append(t)
            commutant_ops.append(parity.c @ t)

    proj = code.projector
    code_parity_ok = float(
        np.linalg.norm(parity.c @ proj - proj @ parity.c)
    ) <= max(tol, 1e-10) * 10
    kraus_parity_ok = max(
        float(np.linalg.norm(parity.c @ e - e @ parity.c)) for e in ops
    ) <= max(tol, 1e-10) * 10

    left = w.conj().T
    sectors = {"plus": parity.p_plus, "minus": parity.p_minus}
    lam = {name: np.zeros((n_ops, n_ops), dtype=complex) for name in sectors}
    present = {}
    resid_sq = 0.0
    for name, p_k in sectors.items():
        right = np.stack([b @ p_k @ w for b in commutant_ops])
        fixed = np.einsum("kl,blm->bkm", left, right).reshape(-1)
        present[name] = float(np.linalg.norm(fixed)) > 1e-10
        for i in range(n_ops):
            for j in range(n_ops):
                head = left @ ops[i].conj().T @ ops[j]
                target = np.einsum("kl,blm->bkm", head, right).reshape(-1)
                lam[name][i, j], res = _scalar_fit(fixed, target)
                resid_sq += res * res
    residual = float(np.sqrt(resid_sq))

    densities_ok = True
    for name in sectors:
        if not present[name]:
            continue
        lam[name], ok = _density_conditions(lam[name], tol)
        densities_ok = densities_ok and ok

    if not (code_parity_ok and kraus_parity_ok):
        verdict = "indeterminate"
    elif residual > tol or not densities_ok:
        verdict = "not_correctable"
    else:
        verdict = "correctable"
    return CorrectabilityReport(
        verdict=verdict,
        residual=residual,
        coefficients={
            "lambda_plus": lam["plus"],
            "lambda_minus": lam["minus"],
        },
        sufficiency_flags={
            "code_parity_compatible": code_parity_ok,
            "kraus_parity_preserving": kraus_parity_ok,
            "sector_densities_valid": densities_ok,
        },
    )


def _constraint_label(constraint):
    if isinstance(constraint, Unconstrained):
        return "unconstrained"
    if isinstance(constraint, Physical):
        return "physical"
    if isinstance(constraint, FixesAlgebra):
        return f"fixes_algebra(dim={constraint.algebra.dim})"
    raise TypeError(f"unsupported constraint {constraint!r}")


def optimal_recovery_fidelity(n, m, rho, constraint=None, tol=1e-7):
    """Largest fidelity between ``r . n`` and ``m`` at ``rho`` over
    admissible recoveries ``r`` from the output of ``n`` to the output
    of ``m``.

    The fidelity is taken on a purification of ``rho``; the returned
    optimizer is the process matrix of the best recovery found (for a
    physical constraint, of the already-sandwiched map).
    """
    constraint = Unconstrained() if constraint is None else constraint
    label = _constraint_label(constraint)
    plan = sdp._recovery_plan(n, m, rho, constraint)
    sol = sdp.solve(plan.problem, tol=tol)
    choi = plan.choi(sol)
    out_dim, in_dim = plan.act_out, plan.act_in
    if isinstance(constraint, Physical):
        inner = channels_mod.channel_from_choi(
            choi, out_dim, in_dim, renormalize=True
        )
        sandwiched = channels_mod.compose(
            constraint.p, channels_mod.compose(inner, constraint.q)
        )
        choi = sandwiched.choi
        out_dim, in_dim = sandwiched.out_dim, sandwiched.in_dim
    return FidelityResult(
        value=float(np.clip(sol.value, 0.0, 1.0)),
        optimizer=choi,
        duality_gap=abs(sol.value - sol.dual_value),
        iterations=sol.iterations,
        constraint_set=label,
        status=sol.status,
        out_dim=out_dim,
        in_dim=in_dim,
    )


def environment_side_fidelity(n, m, rho, constraint=None, tol=1e-7):
    """Largest fidelity between the dilation environments of ``n`` and
    ``m`` at ``rho``, optimized over processings of the environment of
    ``m`` into the environment of ``n``.

    For a fixed-algebra constraint the environments are those of the
    local complements and the processing acts only on the factor beyond
    the conditional expectation; the optimizer then includes the
    identity on that first factor.
    """
    from . import algebra as algebra_mod

    constraint = Unconstrained() if constraint is None else constraint
    label = f"environment({_constraint_label(constraint)})"
    if isinstance(constraint, Physical):
        n = channels_mod.compose(constraint.q, n)
        m = channels_mod.compose(constraint.p, m)
        constraint = Unconstrained()
    rho = sdp._as_hermitian(rho, "rho", dim=n.in_dim)
    if abs(np.trace(rho).real - 1.0) > 1e-8:
        raise ValueError("rho must have unit trace")
    psi = sdp._compact_purification(rho)
    ref = psi.shape[1]
    if isinstance(constraint, Unconstrained):
        src = channels_mod.complementary(m)
        dst = channels_mod.complementary(n)
        left = 1
    else:
        b = constraint.algebra
        if n.out_dim != m.out_dim or b.ambient_dim != n.out_dim:
            raise ValueError("fixed-algebra duality needs matching dimensions")
        src = channels_mod.local_complementary(m, b)
        dst = channels_mod.local_complementary(n, b)
        left = algebra_mod.conditional_expectation(
            algebra_mod.commutant(b)
        ).n_kraus
    act_in = src.out_dim // left
    act_out = dst.out_dim // left
    eta = sdp._state_after(src, psi).reshape(src.out_dim * ref, -1)
    sig = sdp._state_after(dst, psi).reshape(dst.out_dim * ref, -1)
    plan = sdp._build_link_problem(
        eta, sig, left, act_in, act_out, ref, label=label
    )
    sol = sdp.solve(plan.problem, tol=tol)
    choi = plan.choi(sol)
    out_dim, in_dim = act_out, act_in
    if left > 1:
        small = channels_mod.channel_from_choi(
            choi, act_out, act_in, renormalize=True
        )
        full = channels_mod.tensor_channels(
            channels_mod.identity_channel(left), small
        )
        choi = full.choi
        out_dim, in_dim = full.out_dim, full.in_dim
    return FidelityResult(
        value=float(np.clip(sol.value, 0.0, 1.0)),
        optimizer=choi,
        duality_gap=abs(sol.value - sol.dual_value),
        iterations=sol.iterations,
        constraint_set=label,
        status=sol.status,
        out_dim=out_dim,
        in_dim=in_dim,
    )


def verify_duality(n, m, rho, constraint=None, tol=1e-5, solver_tol=None):
    """Compare the recovery-side and environment-side optimal fidelities.

    Both sides are solved to ``solver_tol`` (by default a hundredth of
    ``tol``, floored at 1e-9) and must agree within ``tol``; if either
    solve fails to reach optimality the comparison is indeterminate.
    """
    if solver_tol is None:
        solver_tol = max(tol / 100.0, 1e-9)
    rec = optimal_recovery_fidelity(n, m, rho, constraint, tol=solver_tol)
    env = environment_side_fidelity(n, m, rho, constraint, tol=solver_tol)
    difference = abs(rec.value - env.value)
    indeterminate = rec.status != "optimal" or env.status != "optimal"
    passed = (not indeterminate) and difference <= tol
    return DualityReport(
        recovery=rec,
        environment=env,
        difference=difference,
        passed=passed,
        indeterminate=indeterminate,
    )


def _pure_state_fidelity(a, b):
    root = linalg.herm_sqrt(a, tol=1e-7)
    return float(np.trace(linalg.herm_sqrt(
        root @ b @ root, tol=1e-7
    )).real)


def worst_case_fidelity_seesaw(n, m, code, rounds=10, tol=1e-7):
    """Heuristic worst-case (over code states) recovery fidelity.

    Alternates between optimizing the recovery at the current input
    state and searching for the worst pure code state of that recovery
    (the worst case over states is attained at pure states).  The best
    round's pair is returned as a heuristic lower bound on the max-min
    fidelity; ``status`` is always "heuristic".
    """
    w = code.isometry
    k = code.logical_dim
    if n.in_dim != code.physical_dim or m.in_dim != code.physical_dim:
        raise ValueError("channels must act on the physical space")
    rng = np.random.default_rng(20240817)
    samples = [np.eye(k, dtype=complex)[:, i] for i in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            for phase in (1.0, -1.0, 1j, -1j):
                v = samples[i] + phase * samples[j]
                samples.append(v / np.linalg.norm(v))
    for _ in range(256):
        v = rng.normal(size=k) + 1j * rng.normal(size=k)
        samples.append(v / np.linalg.norm(v))

    def worst_state(rec):
        rn = channels_mod.compose(rec, n)

        def value(x):
            phi = w @ x
            state = np.outer(phi, phi.conj())
            return _pure_state_fidelity(rn(state), m(state))

        best_x = min(samples, key=value)
        best = value(best_x)
        x = best_x.copy()
        step = 0.2
        for _ in range(60):
            grad = np.zeros(k, dtype=complex)
            eps = 1e-6
            for t in range(k):
                for delta in (eps, 1j * eps):
                    probe = x + delta * np.eye(k, dtype=complex)[:, t]
                    probe /= np.linalg.norm(probe)
                    grad[t] += (value(probe) - best) / eps * (
                        1.0 if delta == eps else 1j
                    )
            if np.linalg.norm(grad) < 1e-12:
                break
            cand = x - step * grad / max(np.linalg.norm(grad), 1e-12)
            cand /= np.linalg.norm(cand)
            cand_val = value(cand)
            if cand_val < best - 1e-14:
                x, best = cand, cand_val
            else:
                step /= 2.0
                if step < 1e-6:
                    break
        return best, x

    rho = (w @ w.conj().T) / k
    best_value = -1.0
    best_result = None
    previous = None
    used = 0
    for r in range(max(1, int(rounds))):
        used = r + 1
        res = optimal_recovery_fidelity(n, m, rho, Unconstrained(), tol=1e-9)
        rec = extract_recovery(res)
        value, x_min = worst_state(rec)
        if value > best_value:
            best_value = value
            best_result = res
        phi = w @ x_min
        rho = 0.5 * rho + 0.5 * np.outer(phi, phi.conj())
        if previous is not None and abs(value - previous) < tol:
            break
        previous = value
    return FidelityResult(
        value=float(np.clip(best_value, 0.0, 1.0)),
        optimizer=best_result.optimizer,
        duality_gap=best_result.duality_gap,
        iterations=used,
        constraint_set="worst_case_seesaw(heuristic)",
        status="heuristic",
        out_dim=best_result.out_dim,
        in_dim=best_result.in_dim,
    )


def extract_recovery(result):
    """The optimizing map of a fidelity result as a channel."""
    if result.out_dim <= 0 or result.in_dim <= 0:
        raise ValueError("result does not carry optimizer dimensions")
    return channels_mod.channel_from_choi(
        result.optimizer, result.out_dim, result.in_dim, renormalize=True
    )
