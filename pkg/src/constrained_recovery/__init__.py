"""Constrained recovery of quantum channels.

Operator-algebra aware channel recovery: complementary channels, a
reversibility duality between recovery and degradability, Knill-Laflamme
style correctability checks (including superselection-constrained variants),
fermionic encodings, and the Hermitian-block SDP solver backing it all.

The submodules are the primary interface; the most commonly used names
are re-exported here for convenience.
"""

from . import algebra, channels, fermion, linalg, recovery, scenario, sdp
from .algebra import (
    AlgebraBasis,
    block_structure,
    commutant,
    conditional_expectation,
    generate_algebra,
)
from .channels import Channel, complementary, identity_channel
from .fermion import FermionSystem, geometric_noise, majorana_ring
from .recovery import (
    Code,
    FixesAlgebra,
    Physical,
    Unconstrained,
    environment_side_fidelity,
    fermion_local_check,
    kl_check,
    optimal_recovery_fidelity,
    superselection_kl_check,
    tensor_local_check,
    verify_duality,
)
from .scenario import load_scenario, run_scenario

__version__ = "0.1.0"

__all__ = [
    "algebra",
    "channels",
    "fermion",
    "linalg",
    "recovery",
    "scenario",
    "sdp",
    "AlgebraBasis",
    "block_structure",
    "commutant",
    "conditional_expectation",
    "generate_algebra",
    "Channel",
    "complementary",
    "identity_channel",
    "FermionSystem",
    "geometric_noise",
    "majorana_ring",
    "Code",
    "FixesAlgebra",
    "Physical",
    "Unconstrained",
    "environment_side_fidelity",
    "fermion_local_check",
    "kl_check",
    "optimal_recovery_fidelity",
    "superselection_kl_check",
    "tensor_local_check",
    "verify_duality",
    "load_scenario",
    "run_scenario",
    "__version__",
]
