"""
Correctability of the three-qubit repetition code
=================================================

Walk through the algebraic correctability check on the classic
repetition code: single bit flips are correctable, a coherent logical
flip is not, and the report says why in both cases.
"""

import numpy as np

from constrained_recovery import recovery as rc

# The repetition code embeds one qubit into three: |0> -> |000>, |1> -> |111>.
w = np.zeros((8, 2), dtype=complex)
w[0, 0] = 1.0
w[7, 1] = 1.0
code = rc.Code(2, 8, w)

# Single bit flips on each site, all with equal weight.
x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
eye2 = np.eye(2, dtype=complex)


def on_site(op, site):
    factors = [eye2, eye2, eye2]
    factors[site] = op
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    return out


flips = [np.eye(8, dtype=complex) / 2] + [on_site(x, s) / 2 for s in range(3)]

report = rc.kl_check(code, flips)
print("bit-flip noise:", report.verdict)
print("residual:", report.residual)
print("error density (sigma):")
print(np.round(report.coefficients["sigma"].real, 6))

# The sigma matrix is the density the projected errors leave on the code,
# and a clean verdict means every product W+ Ei+ Ej W equals sigma[j, i]
# times the logical identity.  Now poison the channel with a coherent
# logical flip, which acts differently on the two codewords.
logical_flip = on_site(x, 0) @ on_site(x, 1) @ on_site(x, 2)
poisoned = [np.eye(8, dtype=complex) / np.sqrt(2), logical_flip / np.sqrt(2)]

report = rc.kl_check(code, poisoned)
print()
print("with a coherent logical flip:", report.verdict)
print("residual:", report.residual)

# The residual is the norm of the part of W+ Ei+ Ej W that is NOT
# proportional to the identity, so anything well above the tolerance
# means some pair of errors steers information out of the code.
