"""
Algebras, commutants, and block structure
=========================================

Generate a matrix algebra from a handful of operators, find its
commutant and center, expose the block decomposition, and build the
conditional expectation onto it.
"""

import numpy as np

from constrained_recovery import algebra as alg
from constrained_recovery import channels as ch

# Two commuting projectors on C^6 generate a three-block abelian algebra.
p1 = np.diag([1.0, 1.0, 0.0, 0.0, 0.0, 0.0]).astype(complex)
p2 = np.diag([0.0, 0.0, 1.0, 1.0, 1.0, 0.0]).astype(complex)
a = alg.generate_algebra([p1, p2], 6)
print("algebra dim:", a.dim)
print("commutant dim:", alg.commutant(a).dim)
print("center dim:", alg.center(a).dim)

# The block decomposition writes the ambient space as a direct sum of
# tensor factors, with the algebra acting as M_left x 1_right on each.
bs = alg.block_structure(a)
for k, s in enumerate(bs.sectors):
    print(f"sector {k}: left {s.left_dim} x right {s.right_dim}")

# A non-abelian example: a full 2x2 factor sitting twice inside C^4.
x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
z = np.diag([1.0, -1.0]).astype(complex)
gens = [np.kron(x, np.eye(2)), np.kron(z, np.eye(2))]
b = alg.generate_algebra(gens, 4)
print()
print("M2 x 1 algebra dim:", b.dim)
bs = alg.block_structure(b)
s = bs.sectors[0]
print("single sector, left", s.left_dim, "x right", s.right_dim)

# The conditional expectation onto the algebra is a genuine channel: it
# is trace preserving, completely positive, idempotent, and fixes every
# element of the algebra.
p = alg.conditional_expectation(b)
print()
print("conditional expectation valid:", ch.validate(p).valid)
print("idempotent:", ch.distance(ch.compose(p, p), p).choi_frobenius < 1e-8)
g = gens[0]
print("fixes the generators:", np.linalg.norm(p(g) - g) < 1e-10)

# Off-algebra input gets averaged over the right tensor factor.
y = np.kron(z, x)
print("kills the complement part:", np.linalg.norm(p(y)) < 1e-10)
