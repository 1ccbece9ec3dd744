import numpy as np
import pytest

from constrained_recovery import algebra as alg
from constrained_recovery import channels as ch
from constrained_recovery import linalg
from helpers import planted_algebra, random_hermitian, random_density, random_unitary

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def test_generate_empty_is_trivial():
    a = alg.generate_algebra([], 3)
    assert a.dim == 1
    assert np.allclose(a.basis[0], np.eye(3) / np.sqrt(3))


def test_generate_diagonal():
    a = alg.generate_algebra([Z], 2)
    assert a.dim == 2
    assert alg.contains(a, np.diag([2.0, 5.0]))
    assert not alg.contains(a, X)


def test_generate_full_from_ladder_operators():
    # two fermionic modes: a_1 = (X + iY)/2 (x) 1, a_2 = Z (x) (X + iY)/2
    low = (X + 1j * Y) / 2
    gens = [np.kron(low, np.eye(2)), np.kron(Z, low)]
    a = alg.generate_algebra(gens, 4)
    assert a.dim == 16


def test_generate_closure_and_orthonormality():
    rng = np.random.default_rng(42)
    gens, _, d = planted_algebra(rng, [(2, 1), (1, 2)])
    a = alg.generate_algebra(gens, d)
    rows = np.stack([linalg.vec(b) for b in a.basis])
    gram = rows.conj() @ rows.T
    assert np.linalg.norm(gram - np.eye(a.dim)) < 1e-10
    assert alg.contains(a, np.eye(d), tol=1e-9)
    for b in a.basis:
        assert alg.contains(a, b.conj().T, tol=1e-9)
    for b in a.basis[:3]:
        for c in a.basis[:3]:
            assert alg.contains(a, b @ c, tol=1e-9)


def test_generate_planted_dimensions():
    shapes = [
        [(2, 1), (1, 2)],
        [(2, 2)],
        [(3, 1), (1, 1)],
        [(2, 1), (2, 1)],
        [(2, 2), (1, 3), (1, 1)],
    ]
    rng = np.random.default_rng(7)
    for sectors in shapes:
        gens, _, d = planted_algebra(rng, sectors)
        a = alg.generate_algebra(gens, d)
        assert a.dim == sum(n * n for n, m in sectors)


def test_generate_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        alg.generate_algebra([np.eye(3)], 2)


def test_commutant_of_trivial_is_full():
    a = alg.generate_algebra([], 3)
    assert alg.commutant(a).dim == 9


def test_commutant_of_full_is_trivial():
    a = alg.generate_algebra([X, Z], 2)
    c = alg.commutant(a)
    assert c.dim == 1
    assert np.allclose(c.basis[0] @ X, X @ c.basis[0])


def test_commutant_of_diagonal_is_itself():
    a = alg.generate_algebra([Z], 2)
    c = alg.commutant(a)
    assert c.dim == 2
    for b in c.basis:
        assert abs(b[0, 1]) < 1e-12 and abs(b[1, 0]) < 1e-12
    assert alg.equal_spans(a, c)


def test_commutant_planted_dims_and_residual():
    rng = np.random.default_rng(12)
    for sectors in ([(2, 1), (1, 2)], [(2, 2), (1, 1)], [(3, 2)]):
        gens, _, d = planted_algebra(rng, sectors)
        a = alg.generate_algebra(gens, d)
        c = alg.commutant(a)
        assert c.dim == sum(m * m for n, m in sectors)
        worst = max(
            float(np.linalg.norm(b @ x - x @ b))
            for b in a.basis
            for x in c.basis
        )
        assert worst < 1e-9


def test_double_commutant():
    rng = np.random.default_rng(99)
    shapes = [
        [(2, 1), (1, 2)],
        [(2, 2)],
        [(1, 1), (1, 1), (2, 1)],
        [(2, 2), (2, 1)],
        [(3, 1), (2, 2)],
        [(4, 2), (2, 2), (2, 1), (1, 2)],
    ]
    for sectors in shapes:
        gens, _, d = planted_algebra(rng, sectors)
        a = alg.generate_algebra(gens, d)
        again = alg.commutant(alg.commutant(a))
        assert alg.equal_spans(a, again, tol=1e-7)


def test_center():
    full = alg.generate_algebra([X, Z], 2)
    assert alg.center(full).dim == 1

    rng = np.random.default_rng(3)
    gens, _, d = planted_algebra(rng, [(2, 1), (1, 2), (2, 2)])
    a = alg.generate_algebra(gens, d)
    z = alg.center(a)
    assert z.dim == 3
    for p in z.basis:
        for q in z.basis:
            assert np.linalg.norm(p @ q - q @ p) < 1e-9
        for b in a.basis:
            assert np.linalg.norm(p @ b - b @ p) < 1e-9


def test_minimal_central_projectors_diag():
    a = alg.generate_algebra([Z], 2)
    projs = alg.minimal_central_projectors(a)
    assert len(projs) == 2
    assert np.allclose(projs[0], np.diag([1.0, 0.0]))
    assert np.allclose(projs[1], np.diag([0.0, 1.0]))


def test_minimal_central_projectors_full():
    a = alg.generate_algebra([X, Z], 2)
    projs = alg.minimal_central_projectors(a)
    assert len(projs) == 1
    assert np.allclose(projs[0], np.eye(2))


def test_minimal_central_projectors_planted():
    rng = np.random.default_rng(21)
    sectors = [(2, 2), (2, 1), (1, 1)]
    gens, _, d = planted_algebra(rng, sectors)
    a = alg.generate_algebra(gens, d)
    projs = alg.minimal_central_projectors(a)
    assert len(projs) == 3
    total = sum(projs)
    assert np.linalg.norm(total - np.eye(d)) < 1e-9
    for i, p in enumerate(projs):
        for j, q in enumerate(projs):
            expect = p if i == j else 0 * p
            assert np.linalg.norm(p @ q - expect) < 1e-9
    ranks = sorted(round(np.trace(p).real) for p in projs)
    assert ranks == sorted(n * m for n, m in sectors)
    # ordering contract: descending rank
    traces = [round(np.trace(p).real) for p in projs]
    assert traces == sorted(traces, reverse=True)


def test_cluster_guard_raises_on_near_degenerate_split():
    with pytest.raises(alg.DegenerateSplitError):
        alg._cluster_eigenvalues(np.array([0.0, 5e-8, 1.0]), 1e-8)
    clusters = alg._cluster_eigenvalues(np.array([0.0, 1e-12, 1.0]), 1e-8)
    assert [len(c) for c in clusters] == [2, 1]


def test_block_structure_extremes():
    full = alg.generate_algebra([X, Z], 2)
    bs = alg.block_structure(full)
    assert [(s.left_dim, s.right_dim) for s in bs.sectors] == [(2, 1)]

    triv = alg.generate_algebra([], 3)
    bs = alg.block_structure(triv)
    assert [(s.left_dim, s.right_dim) for s in bs.sectors] == [(1, 3)]


def test_block_structure_roundtrip():
    rng = np.random.default_rng(4)
    sectors = [(2, 2), (1, 2), (2, 1)]
    gens, _, d = planted_algebra(rng, sectors)
    a = alg.generate_algebra(gens, d)
    bs = alg.block_structure(a)
    found = sorted((s.left_dim, s.right_dim) for s in bs.sectors)
    assert found == sorted(sectors)
    for s in bs.sectors:
        nm = s.left_dim * s.right_dim
        assert np.linalg.norm(s.isometry @ s.isometry.conj().T - np.eye(nm)) < 1e-9
        assert np.linalg.norm(s.isometry.conj().T @ s.isometry - s.projector) < 1e-9
    for b in a.basis:
        rebuilt = np.zeros((d, d), dtype=complex)
        for s in bs.sectors:
            conj = s.isometry @ b @ s.isometry.conj().T
            left = linalg.partial_trace(conj, [s.left_dim, s.right_dim], keep=[0])
            rebuilt += s.isometry.conj().T @ np.kron(
                left / s.right_dim, np.eye(s.right_dim)
            ) @ s.isometry
        assert np.linalg.norm(rebuilt - b) < 1e-8


def test_block_structure_rejects_non_algebra():
    bad = alg.AlgebraBasis(
        4,
        [np.eye(4) / 2, np.kron(X, np.eye(2)) / 2, np.kron(Y, np.eye(2)) / 2],
    )
    with pytest.raises(ValueError):
        alg.block_structure(bad)


def test_conditional_expectation_full_is_identity():
    a = alg.generate_algebra([X, Z], 2)
    p = alg.conditional_expectation(a)
    assert ch.distance(p, ch.identity_channel(2)).choi_frobenius < 1e-10


def test_conditional_expectation_parity():
    zz = np.kron(Z, Z)
    a = alg.commutant(alg.generate_algebra([zz], 4))
    p = alg.conditional_expectation(a)
    rng = np.random.default_rng(8)
    for _ in range(4):
        rho = random_density(rng, 4)
        expect = (rho + zz @ rho @ zz) / 2
        assert np.linalg.norm(p(rho) - expect) < 1e-10


def test_conditional_expectation_diag_matches_projection():
    a = alg.generate_algebra([np.diag([1.0, 2.0, 3.0])], 3)
    p = alg.conditional_expectation(a)
    rng = np.random.default_rng(9)
    for _ in range(4):
        rho = random_density(rng, 3)
        proj = sum(linalg.hs_inner(b, rho) * b for b in a.basis)
        assert np.linalg.norm(p(rho) - np.diag(np.diag(rho))) < 1e-10
        assert np.linalg.norm(p(rho) - proj) < 1e-10


def test_conditional_expectation_invariants():
    rng = np.random.default_rng(16)
    gens, _, d = planted_algebra(rng, [(2, 2), (1, 1)])
    a = alg.generate_algebra(gens, d)
    p = alg.conditional_expectation(a)

    rep = ch.validate(p, tol=1e-9)
    assert rep.valid
    assert ch.distance(ch.compose(p, p), p).choi_frobenius < 1e-8
    for b in a.basis:
        assert np.linalg.norm(p(b) - b) < 1e-10
    # Hilbert-Schmidt self-adjointness: <X, P(Y)> = <P(X), Y>
    for _ in range(4):
        x = random_hermitian(rng, d)
        y = random_hermitian(rng, d)
        lhs = linalg.hs_inner(x, p(y))
        rhs = linalg.hs_inner(p(x), y)
        assert abs(lhs - rhs) < 1e-8


def test_commuting_expectations_commute():
    rng = np.random.default_rng(31)
    a = alg.generate_algebra([np.kron(random_hermitian(rng, 2), np.eye(2))], 4)
    b = alg.generate_algebra([np.kron(np.eye(2), random_hermitian(rng, 2))], 4)
    pa = alg.conditional_expectation(a)
    pb = alg.conditional_expectation(b)
    d = ch.distance(ch.compose(pa, pb), ch.compose(pb, pa)).choi_frobenius
    assert d < 1e-8


def test_one_design_twirl_cross_check():
    # averaging over the commuting unitaries {1, C} projects onto {C}'
    zz = np.kron(Z, Z)
    twirl = ch.Channel([np.eye(4) / np.sqrt(2), zz / np.sqrt(2)])
    p = alg.conditional_expectation(alg.commutant(alg.generate_algebra([zz], 4)))
    assert ch.distance(twirl, p).choi_frobenius < 1e-9

    dephase = ch.Channel([np.eye(2) / np.sqrt(2), Z / np.sqrt(2)])
    pd = alg.conditional_expectation(alg.generate_algebra([Z], 2))
    assert ch.distance(dephase, pd).choi_frobenius < 1e-9


def test_join_intersect_contains():
    rng = np.random.default_rng(13)
    gens, _, d = planted_algebra(rng, [(2, 1), (1, 2)])
    a = alg.generate_algebra(gens, d)
    triv = alg.generate_algebra([], d)
    assert alg.equal_spans(alg.join(a, triv), a)
    assert alg.equal_spans(alg.intersect(a, a), a)
    full = alg.generate_algebra([random_hermitian(rng, d) for _ in range(2)], d)
    assert full.dim == d * d
    assert alg.equal_spans(alg.intersect(a, full), a)
    for b in a.basis:
        assert alg.contains(a, b)
    assert not alg.contains(a, random_hermitian(rng, d))


def test_relative_commutant():
    rng = np.random.default_rng(6)
    full = alg.generate_algebra([random_hermitian(rng, 4) for _ in range(2)], 4)
    triv = alg.generate_algebra([], 4)
    assert alg.equal_spans(alg.relative_commutant(triv, full), full)

    b = alg.generate_algebra(
        [np.kron(np.eye(2), random_hermitian(rng, 2)) for _ in range(2)], 4
    )
    a_side = alg.generate_algebra(
        [np.kron(random_hermitian(rng, 2), np.eye(2)) for _ in range(2)], 4
    )
    assert b.dim == 4 and a_side.dim == 4
    assert alg.equal_spans(alg.relative_commutant(b, full), a_side)

    small = alg.generate_algebra([Z], 2)
    with pytest.raises(ValueError):
        alg.relative_commutant(small, alg.generate_algebra([], 2))


def test_minimal_projectors_seed_reproducibility():
    rng = np.random.default_rng(55)
    gens, _, d = planted_algebra(rng, [(2, 1), (1, 1), (1, 2)])
    a = alg.generate_algebra(gens, d)
    first = alg.minimal_central_projectors(a, seed=123)
    second = alg.minimal_central_projectors(a, seed=123)
    assert len(first) == len(second) == 3
    for p, q in zip(first, second):
        assert np.array_equal(p, q)


def test_conjugated_basis_is_left_factor_form():
    rng = np.random.default_rng(71)
    gens, _, d = planted_algebra(rng, [(2, 3)])
    a = alg.generate_algebra(gens, d)
    bs = alg.block_structure(a)
    s = bs.sectors[0]
    for b in a.basis:
        conj = s.isometry @ b @ s.isometry.conj().T
        left = linalg.partial_trace(conj, [s.left_dim, s.right_dim], keep=[0])
        assert np.linalg.norm(
            conj - np.kron(left / s.right_dim, np.eye(s.right_dim))
        ) < 1e-8
