"""Declarative scenario files and batch task execution.

A scenario is a JSON document describing one finite-dimensional system,
named algebras, channels, and codes on it, and a list of tasks that
reference those objects by name.  Validation happens in two stages
before any numerics start: structural validation against the schema
shipped at ``data/scenario.schema.json``, then a consistency pass that
resolves names and checks dimensional compatibility.  Both stages raise
:class:`ScenarioError`, so callers can tell a malformed scenario
(rejected up front) apart from a numerical failure inside a task.

Reports are plain dictionaries ready for ``json.dump``: complex scalars
are encoded as ``[real, imag]`` pairs, matrices as row-major nested
lists of such pairs, and every residual or fidelity value sits next to
the tolerance it was judged against.
"""

from __future__ import annotations

import json
import platform
import time
from dataclasses import dataclass
from importlib import metadata, resources
from pathlib import Path

import jsonschema
import numpy as np

from . import algebra as algebra_mod
from . import channels as channel_mod
from . import fermion as fermion_mod
from . import recovery as recovery_mod

__all__ = [
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "run_scenario",
    "report_rows",
    "ring_demo_scenario",
    "bundled_scenario_names",
    "bundled_scenario_text",
    "encode",
]

SCHEMA_VERSION = 1
REPORT_VERSION = 1

_MAX_SYSTEM_DIM = 4096
_MATRIX_EMBED_LIMIT = 4096

_DEFAULT_CHECK_TOL = 1e-8
_DEFAULT_SOLVER_TOL = 1e-7
_DEFAULT_DUALITY_TOL = 1e-5
_DEFAULT_BLOCK_SEED = 1793


class ScenarioError(ValueError):
    """A scenario failed schema validation or a consistency check."""


class _TaskFailure(RuntimeError):
    """A task ran but did not produce a trustworthy numerical answer."""


_SCHEMA = None


def _schema():
    global _SCHEMA
    if _SCHEMA is None:
        text = (
            resources.files(__package__)
            .joinpath("data/scenario.schema.json")
            .read_text()
        )
        _SCHEMA = json.loads(text)
    return _SCHEMA


def bundled_scenario_names():
    """Names of the scenario files shipped inside the package."""
    folder = resources.files(__package__).joinpath("scenarios")
    return sorted(
        p.name[: -len(".json")]
        for p in folder.iterdir()
        if p.name.endswith(".json")
    )


def bundled_scenario_text(name):
    """Raw JSON text of a bundled scenario; accepts the name with or
    without the ``.json`` suffix."""
    if name.endswith(".json"):
        name = name[: -len(".json")]
    path = resources.files(__package__).joinpath(f"scenarios/{name}.json")
    if not path.is_file():
        known = ", ".join(bundled_scenario_names()) or "none"
        raise ScenarioError(
            f"no bundled scenario named {name!r} (bundled: {known})"
        )
    return path.read_text()


# ---------------------------------------------------------------------------
# JSON <-> numpy


def _as_complex(pair):
    return complex(float(pair[0]), float(pair[1]))


def _as_matrix(rows, what):
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ScenarioError(f"{what}: matrix rows have unequal lengths")
    return np.array(
        [[_as_complex(entry) for entry in row] for row in rows], dtype=complex
    )


def encode(value):
    """JSON-ready form of a result value.

    Complex scalars become ``[real, imag]`` pairs; complex arrays become
    row-major nested lists of such pairs; real arrays become nested
    floats; dicts and sequences are encoded entrywise.
    """
    if isinstance(value, np.ndarray):
        if value.ndim == 0:
            return encode(value[()])
        return [encode(v) for v in value]
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, dict):
        return {key: encode(v) for key, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    return value


def _encode_gated(array):
    """Encode an array, or return None when it is too large to embed."""
    a = np.asarray(array)
    if a.size > _MATRIX_EMBED_LIMIT:
        return None
    return encode(a)


# ---------------------------------------------------------------------------
# Scenario loading


@dataclass
class Scenario:
    """A validated scenario with every named object already constructed."""

    name: str
    source: str
    raw: dict
    dim: int
    qudit_dims: list
    fermion_system: object
    algebras: dict
    channels: dict
    codes: dict
    tasks: list
    seed: int = None


def load_scenario(source):
    """Load, validate, and resolve a scenario.

    ``source`` may be a filesystem path, the name of a bundled scenario,
    or an already-parsed dict.  Raises :class:`ScenarioError` on any
    schema violation or inconsistency; no numerics run before this
    function returns.
    """
    if isinstance(source, dict):
        raw = source
        label = "<dict>"
    else:
        path = Path(source)
        if path.is_file():
            text = path.read_text()
            label = str(path)
        else:
            text = bundled_scenario_text(str(source))
            label = f"bundled:{source}"
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{label}: not valid JSON ({exc})") from exc

    try:
        jsonschema.validate(raw, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(part) for part in exc.absolute_path) or "<root>"
        raise ScenarioError(f"{label}: schema violation at {where}: {exc.message}") from exc

    dim, qudit_dims, fsys = _build_system(raw["system"])
    algebras = {
        name: _build_algebra(name, spec, dim, fsys)
        for name, spec in raw.get("algebras", {}).items()
    }
    channels = {
        name: _build_channel(name, spec, dim, fsys)
        for name, spec in raw.get("channels", {}).items()
    }
    codes = {
        name: _build_code(name, spec, dim, fsys)
        for name, spec in raw.get("codes", {}).items()
    }
    scenario = Scenario(
        name=raw.get("name", "unnamed"),
        source=label,
        raw=raw,
        dim=dim,
        qudit_dims=qudit_dims,
        fermion_system=fsys,
        algebras=algebras,
        channels=channels,
        codes=codes,
        tasks=[],
        seed=raw.get("seed"),
    )
    scenario.tasks = [
        _resolve_task(scenario, task, index)
        for index, task in enumerate(raw["tasks"])
    ]
    return scenario


def _build_system(spec):
    if spec["kind"] == "qudit":
        dims = [int(d) for d in spec["dims"]]
        dim = int(np.prod(dims))
        if dim > _MAX_SYSTEM_DIM:
            raise ScenarioError(
                f"system dimension {dim} exceeds the supported maximum "
                f"{_MAX_SYSTEM_DIM}"
            )
        return dim, dims, None
    modes = int(spec["modes"])
    return 2**modes, None, fermion_mod.FermionSystem(modes)


def _require_fermion(fsys, what):
    if fsys is None:
        raise ScenarioError(f"{what} requires a fermionic system")
    return fsys


def _whole_region(fsys):
    return tuple(range(1, 2 * fsys.n_modes + 1))


def _parity_matrix(fsys):
    return np.asarray(fermion_mod.parity_operator(fsys, _whole_region(fsys)).c)


def _full_algebra_generators(dim):
    shift = np.roll(np.eye(dim, dtype=complex), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))
    return [shift, clock]


def _build_algebra(name, spec, dim, fsys):
    what = f"algebra {name!r}"
    kind = spec["kind"]
    try:
        if kind == "generated":
            gens = []
            for i, rows in enumerate(spec["generators"]):
                g = _as_matrix(rows, f"{what} generator {i}")
                if g.shape != (dim, dim):
                    raise ScenarioError(
                        f"{what} generator {i} has shape {g.shape}, "
                        f"expected ({dim}, {dim})"
                    )
                gens.append(g)
            return algebra_mod.generate_algebra(gens, dim)
        if kind == "full":
            return algebra_mod.generate_algebra(_full_algebra_generators(dim), dim)
        if kind == "parity":
            fsys = _require_fermion(fsys, what)
            return algebra_mod.generate_algebra([_parity_matrix(fsys)], dim)
        fsys = _require_fermion(fsys, what)
        majoranas = tuple(int(i) for i in spec["majoranas"])
        _check_majorana_indices(majoranas, fsys, what)
        return fermion_mod.physical_algebra(fsys, majoranas)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{what}: {exc}") from exc


def _check_majorana_indices(indices, fsys, what):
    top = 2 * fsys.n_modes
    bad = [i for i in indices if not 1 <= i <= top]
    if bad:
        raise ScenarioError(f"{what}: Majorana indices {bad} outside 1..{top}")
    if len(set(indices)) != len(indices):
        raise ScenarioError(f"{what}: repeated Majorana indices")


def _build_channel(name, spec, dim, fsys):
    what = f"channel {name!r}"
    kind = spec["kind"]
    try:
        if kind == "kraus":
            ops = [
                _as_matrix(rows, f"{what} operator {i}")
                for i, rows in enumerate(spec["operators"])
            ]
            shapes = {op.shape for op in ops}
            if len(shapes) != 1:
                raise ScenarioError(f"{what}: operators have mixed shapes {shapes}")
            return channel_mod.Channel(ops)
        if kind == "identity":
            return channel_mod.identity_channel(int(spec.get("dim", dim)))
        if kind == "geometric_noise":
            fsys = _require_fermion(fsys, what)
            weights = spec.get("weights")
            if weights is not None:
                weights = [float(w) for w in weights]
            return fermion_mod.geometric_noise(
                fsys,
                int(spec["max_support"]),
                weights,
                allow_odd=bool(spec.get("allow_odd", False)),
            )
        if kind == "monomials":
            fsys = _require_fermion(fsys, what)
            ops = []
            for i, term in enumerate(spec["terms"]):
                indices = tuple(int(x) for x in term["indices"])
                _check_majorana_indices(indices, fsys, f"{what} term {i}")
                if list(indices) != sorted(indices):
                    raise ScenarioError(
                        f"{what} term {i}: indices must be strictly increasing "
                        "(reordering flips the sign convention)"
                    )
                coeff = _as_complex(term["coeff"])
                ops.append(coeff * fermion_mod.majorana_monomial(fsys, indices))
            return channel_mod.Channel(ops)
        fsys = _require_fermion(fsys, what)
        c = _parity_matrix(fsys)
        if kind == "parity_dephasing":
            return channel_mod.Channel([np.eye(dim) / np.sqrt(2), c / np.sqrt(2)])
        p_plus = (np.eye(dim) + c) / 2.0
        p_minus = (np.eye(dim) - c) / 2.0
        return channel_mod.Channel([p_plus, p_minus])
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{what}: {exc}") from exc


def _build_code(name, spec, dim, fsys):
    what = f"code {name!r}"
    try:
        if spec["kind"] == "isometry":
            w = _as_matrix(spec["isometry"], what)
            return recovery_mod.Code(w.shape[1], w.shape[0], w)
        fsys = _require_fermion(fsys, what)
        unpaired = tuple(int(i) for i in spec["unpaired"])
        pairing = tuple(
            (int(a), int(b)) for a, b in spec["pairing"]
        )
        _check_majorana_indices(
            unpaired + tuple(i for pair in pairing for i in pair), fsys, what
        )
        ring = fermion_mod.majorana_ring(fsys, unpaired, pairing)
        return ring.code
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{what}: {exc}") from exc


# ---------------------------------------------------------------------------
# Task resolution (all consistency checks happen here, before any run)


def _lookup(table, name, what, index):
    if name not in table:
        known = ", ".join(sorted(table)) or "none"
        raise ScenarioError(
            f"task {index}: unknown {what} {name!r} (defined: {known})"
        )
    return table[name]


def _resolve_state(scenario, spec, dim, index):
    if spec is None or spec["kind"] == "maximally_mixed":
        return np.eye(dim, dtype=complex) / dim
    if spec["kind"] == "code_mixed":
        code = _lookup(scenario.codes, spec["code"], "code", index)
        if code.physical_dim != dim:
            raise ScenarioError(
                f"task {index}: state code lives on dimension "
                f"{code.physical_dim}, expected {dim}"
            )
        return (code.projector / code.logical_dim).astype(complex)
    rho = _as_matrix(spec["matrix"], f"task {index} state")
    if rho.shape != (dim, dim):
        raise ScenarioError(
            f"task {index}: state has shape {rho.shape}, expected ({dim}, {dim})"
        )
    if np.linalg.norm(rho - rho.conj().T) > 1e-8:
        raise ScenarioError(f"task {index}: state is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-8:
        raise ScenarioError(f"task {index}: state trace is not 1")
    if np.linalg.eigvalsh(rho).min() < -1e-8:
        raise ScenarioError(f"task {index}: state is not positive semidefinite")
    return rho


def _resolve_constraint(scenario, spec, n, m, index):
    if spec is None or spec["kind"] == "unconstrained":
        return None, {}
    if spec["kind"] == "physical":
        p = _lookup(scenario.channels, spec["p"], "channel", index)
        q = _lookup(scenario.channels, spec["q"], "channel", index)
        if (q.in_dim, q.out_dim) != (n.out_dim, n.out_dim):
            raise ScenarioError(
                f"task {index}: constraint channel q must act on dimension "
                f"{n.out_dim}"
            )
        if (p.in_dim, p.out_dim) != (m.out_dim, m.out_dim):
            raise ScenarioError(
                f"task {index}: constraint channel p must act on dimension "
                f"{m.out_dim}"
            )
        return recovery_mod.Physical(p, q), {"p": spec["p"], "q": spec["q"]}
    b = _lookup(scenario.algebras, spec["algebra"], "algebra", index)
    if n.out_dim != m.out_dim or b.ambient_dim != n.out_dim:
        raise ScenarioError(
            f"task {index}: a fixed algebra needs matching channel output "
            f"dimensions equal to its ambient dimension {b.ambient_dim}"
        )
    return recovery_mod.FixesAlgebra(b), {"algebra": spec["algebra"]}


def _resolve_check(scenario, task, index):
    code = _lookup(scenario.codes, task["code"], "code", index)
    chan = _lookup(scenario.channels, task["channel"], "channel", index)
    variant = task["variant"]
    args = {"code": code, "channel": chan}
    refs = {"code": task["code"], "channel": task["channel"]}
    if variant == "tensor-local":
        if "dims" not in task:
            raise ScenarioError(f"task {index}: tensor-local needs 'dims'")
        da, db = (int(x) for x in task["dims"])
        if da * db != code.physical_dim:
            raise ScenarioError(
                f"task {index}: dims {da}x{db} do not factor the code's "
                f"physical dimension {code.physical_dim}"
            )
        if (chan.in_dim, chan.out_dim) != (da, da):
            raise ScenarioError(
                f"task {index}: tensor-local noise must act on the first "
                f"factor (dimension {da})"
            )
        args["dims"] = (da, db)
        return args, refs
    if chan.in_dim != code.physical_dim:
        raise ScenarioError(
            f"task {index}: channel input dimension {chan.in_dim} does not "
            f"match the code's physical dimension {code.physical_dim}"
        )
    if variant == "superselection-kl":
        if "projectors" not in task:
            raise ScenarioError(
                f"task {index}: superselection-kl needs 'projectors'"
            )
        if task["projectors"] == "parity":
            fsys = _require_fermion(
                scenario.fermion_system, f"task {index}: parity projectors"
            )
            c = _parity_matrix(fsys)
            projectors = [(np.eye(scenario.dim) + c) / 2.0, (np.eye(scenario.dim) - c) / 2.0]
        else:
            projectors = [
                _as_matrix(rows, f"task {index} projector {i}")
                for i, rows in enumerate(task["projectors"])
            ]
        d = chan.out_dim
        for i, p in enumerate(projectors):
            if p.shape != (d, d):
                raise ScenarioError(
                    f"task {index}: projector {i} has shape {p.shape}, "
                    f"expected ({d}, {d})"
                )
        args["projectors"] = projectors
    elif variant == "fermion-local":
        if "region" not in task:
            raise ScenarioError(f"task {index}: fermion-local needs 'region'")
        fsys = _require_fermion(
            scenario.fermion_system, f"task {index}: fermion-local"
        )
        region = tuple(int(i) for i in task["region"])
        _check_majorana_indices(region, fsys, f"task {index}")
        args["region"] = region
    return args, refs


def _resolve_fidelity(scenario, task, index):
    n = _lookup(scenario.channels, task["noise"], "channel", index)
    m = _lookup(scenario.channels, task["target"], "channel", index)
    refs = {"noise": task["noise"], "target": task["target"]}
    if n.in_dim != m.in_dim:
        raise ScenarioError(
            f"task {index}: noise and target must share an input dimension "
            f"({n.in_dim} vs {m.in_dim})"
        )
    args = {"noise": n, "target": m}
    if task["variant"] == "seesaw":
        if "code" not in task:
            raise ScenarioError(f"task {index}: seesaw needs 'code'")
        code = _lookup(scenario.codes, task["code"], "code", index)
        if code.physical_dim != n.in_dim:
            raise ScenarioError(
                f"task {index}: seesaw code lives on dimension "
                f"{code.physical_dim}, expected {n.in_dim}"
            )
        args["code"] = code
        args["rounds"] = int(task.get("rounds", 10))
        refs["code"] = task["code"]
        return args, refs
    args["state"] = _resolve_state(scenario, task.get("state"), n.in_dim, index)
    if task.get("state") is not None:
        refs["state"] = task["state"]["kind"]
    constraint, cref = _resolve_constraint(
        scenario, task.get("constraint"), n, m, index
    )
    args["constraint"] = constraint
    if task.get("constraint") is not None:
        refs["constraint"] = dict(cref, kind=task["constraint"]["kind"])
    return args, refs


def _resolve_algebra_task(scenario, task, index):
    a = _lookup(scenario.algebras, task["algebra"], "algebra", index)
    return {"algebra": a}, {"algebra": task["algebra"]}


def _resolve_channel_task(scenario, task, index):
    chan = _lookup(scenario.channels, task["channel"], "channel", index)
    args = {"channel": chan}
    refs = {"channel": task["channel"]}
    variant = task["variant"]
    if variant in ("local-complement", "is-local"):
        if "algebra" not in task:
            raise ScenarioError(f"task {index}: {variant} needs 'algebra'")
        a = _lookup(scenario.algebras, task["algebra"], "algebra", index)
        if a.ambient_dim != chan.in_dim:
            raise ScenarioError(
                f"task {index}: algebra ambient dimension {a.ambient_dim} "
                f"does not match the channel input {chan.in_dim}"
            )
        args["algebra"] = a
        refs["algebra"] = task["algebra"]
    if variant == "is-local":
        if "second_algebra" not in task:
            raise ScenarioError(f"task {index}: is-local needs 'second_algebra'")
        b = _lookup(scenario.algebras, task["second_algebra"], "algebra", index)
        if b.ambient_dim != chan.in_dim:
            raise ScenarioError(
                f"task {index}: second algebra ambient dimension "
                f"{b.ambient_dim} does not match the channel input {chan.in_dim}"
            )
        args["second_algebra"] = b
        refs["second_algebra"] = task["second_algebra"]
    if variant == "is-physical":
        for key in ("p", "q"):
            if key not in task:
                raise ScenarioError(f"task {index}: is-physical needs '{key}'")
        p = _lookup(scenario.channels, task["p"], "channel", index)
        q = _lookup(scenario.channels, task["q"], "channel", index)
        if (p.in_dim, p.out_dim) != (chan.in_dim, chan.in_dim):
            raise ScenarioError(
                f"task {index}: p must act on dimension {chan.in_dim}"
            )
        if (q.in_dim, q.out_dim) != (chan.out_dim, chan.out_dim):
            raise ScenarioError(
                f"task {index}: q must act on dimension {chan.out_dim}"
            )
        args["p"], args["q"] = p, q
        refs["p"], refs["q"] = task["p"], task["q"]
    return args, refs


def _default_tol(task):
    if task["task"] == "check":
        return _DEFAULT_CHECK_TOL
    if task["task"] == "fidelity":
        if task["variant"] == "duality":
            return _DEFAULT_DUALITY_TOL
        return _DEFAULT_SOLVER_TOL
    return _DEFAULT_CHECK_TOL


def _resolve_task(scenario, task, index):
    resolvers = {
        "check": _resolve_check,
        "fidelity": _resolve_fidelity,
        "algebra": _resolve_algebra_task,
        "channel": _resolve_channel_task,
    }
    args, refs = resolvers[task["task"]](scenario, task, index)
    return {
        "index": index,
        "task": task["task"],
        "variant": task["variant"],
        "tol": float(task.get("tol", _default_tol(task))),
        "refs": refs,
        "args": args,
    }


# ---------------------------------------------------------------------------
# Task execution


def _run_check(resolved, tol, seed):
    args = resolved["args"]
    variant = resolved["variant"]
    if variant == "kl":
        rep = recovery_mod.kl_check(args["code"], args["channel"], tol=tol)
    elif variant == "superselection-kl":
        rep = recovery_mod.superselection_kl_check(
            args["code"], args["channel"], args["projectors"], tol=tol
        )
    elif variant == "tensor-local":
        rep = recovery_mod.tensor_local_check(
            args["code"], args["channel"], args["dims"], tol=tol
        )
    else:
        rep = recovery_mod.fermion_local_check(
            args["code"], args["channel"], args["region"], tol=tol
        )
    out = {
        "verdict": rep.verdict,
        "correctable": bool(rep),
        "residual": float(rep.residual),
        "tol": tol,
        "sufficiency_flags": dict(rep.sufficiency_flags),
    }
    coefficients = {}
    for key, value in rep.coefficients.items():
        encoded = _encode_gated(value)
        if encoded is not None:
            coefficients[key] = encoded
    out["coefficients"] = coefficients
    return out


def _solver_summary(result, tol):
    return {
        "value": float(result.value),
        "duality_gap": float(result.duality_gap),
        "iterations": int(result.iterations),
        "status": result.status,
        "constraint_set": result.constraint_set,
        "tol": tol,
    }


def _run_fidelity(resolved, tol, seed):
    args = resolved["args"]
    variant = resolved["variant"]
    n, m = args["noise"], args["target"]
    if variant == "seesaw":
        result = recovery_mod.worst_case_fidelity_seesaw(
            n, m, args["code"], rounds=args["rounds"], tol=tol
        )
        return _solver_summary(result, tol)
    if variant == "duality":
        rep = recovery_mod.verify_duality(
            n, m, args["state"], args["constraint"], tol=tol
        )
        if rep.indeterminate:
            raise _TaskFailure(
                "duality comparison indeterminate: a solve did not reach "
                "optimality"
            )
        return {
            "recovery_value": float(rep.recovery.value),
            "environment_value": float(rep.environment.value),
            "difference": float(rep.difference),
            "passed": bool(rep.passed),
            "tol": tol,
            "recovery": _solver_summary(rep.recovery, tol),
            "environment": _solver_summary(rep.environment, tol),
        }
    solve = (
        recovery_mod.optimal_recovery_fidelity
        if variant == "optimal"
        else recovery_mod.environment_side_fidelity
    )
    result = solve(n, m, args["state"], args["constraint"], tol=tol)
    if result.status != "optimal":
        raise _TaskFailure(f"solver finished with status {result.status!r}")
    return _solver_summary(result, tol)


def _algebra_summary(basis):
    out = {"dimension": int(basis.dim), "ambient_dim": int(basis.ambient_dim)}
    encoded = _encode_gated(basis.basis)
    if encoded is not None:
        out["basis"] = encoded
    return out


def _run_algebra(resolved, tol, seed):
    a = resolved["args"]["algebra"]
    variant = resolved["variant"]
    if variant == "commutant":
        return _algebra_summary(algebra_mod.commutant(a))
    if variant == "center":
        return _algebra_summary(algebra_mod.center(a))
    used_seed = _DEFAULT_BLOCK_SEED if seed is None else seed
    blocks = algebra_mod.block_structure(a, seed=used_seed)
    sectors = []
    for sector in blocks.sectors:
        entry = {
            "left_dim": int(sector.left_dim),
            "right_dim": int(sector.right_dim),
        }
        encoded = _encode_gated(sector.isometry)
        if encoded is not None:
            entry["isometry"] = encoded
        sectors.append(entry)
    return {
        "ambient_dim": int(blocks.ambient_dim),
        "seed": int(used_seed),
        "sectors": sectors,
    }


def _channel_summary(chan):
    out = {
        "out_dim": int(chan.out_dim),
        "in_dim": int(chan.in_dim),
        "n_kraus": int(chan.n_kraus),
    }
    encoded = _encode_gated(np.asarray(chan.kraus))
    if encoded is not None:
        out["kraus"] = encoded
    return out


def _run_channel(resolved, tol, seed):
    args = resolved["args"]
    chan = args["channel"]
    variant = resolved["variant"]
    if variant == "complement":
        return _channel_summary(channel_mod.complementary(chan))
    if variant == "local-complement":
        lc = channel_mod.local_complementary(chan, args["algebra"])
        defect = channel_mod.local_complement_defect(chan, args["algebra"], lc)
        out = _channel_summary(lc)
        out["defect"] = float(defect)
        out["within_tol"] = bool(defect <= tol)
        out["tol"] = tol
        return out
    if variant == "is-physical":
        rep = channel_mod.is_physical(chan, args["p"], args["q"], tol=tol)
        return {
            "physical": bool(rep.physical),
            "residual": float(rep.residual),
            "tol": float(rep.tol),
        }
    rep = channel_mod.is_local(
        chan, args["algebra"], args["second_algebra"], tol=tol
    )
    return {
        "local": bool(rep.local),
        "strong": bool(rep.strong),
        "maps_into_a": bool(rep.maps_into_a),
        "tol": float(rep.tol),
        "fixes": {
            "fixes": bool(rep.fixes.fixes),
            "adjoint_residual": float(rep.fixes.adjoint_residual),
            "commutation_residual": float(rep.fixes.commutation_residual),
            "tol": float(rep.fixes.tol),
        },
    }


_RUNNERS = {
    "check": _run_check,
    "fidelity": _run_fidelity,
    "algebra": _run_algebra,
    "channel": _run_channel,
}


def _provenance(seed):
    try:
        version = metadata.version("constrained-recovery")
    except metadata.PackageNotFoundError:
        version = "unversioned"
    return {
        "package": "constrained-recovery",
        "package_version": version,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "seed": seed,
    }


def run_scenario(scenario, seed=None, tol=None):
    """Run every task in ``scenario`` and assemble the report dict.

    ``seed`` overrides the scenario's own seed; ``tol`` overrides every
    per-task tolerance.  Task exceptions are captured in the report
    rather than raised: a task entry with ``completed: false`` carries
    the error message, and ``all_tasks_completed`` reflects the whole
    run.  Verdicts and fidelity values are never failures; only a task
    that could not produce an answer is.
    """
    used_seed = seed if seed is not None else scenario.seed
    started = time.perf_counter()
    entries = []
    all_completed = True
    for resolved in scenario.tasks:
        eff_tol = tol if tol is not None else resolved["tol"]
        entry = {
            "index": resolved["index"],
            "task": resolved["task"],
            "variant": resolved["variant"],
            "refs": resolved["refs"],
            "tol": eff_tol,
        }
        t0 = time.perf_counter()
        try:
            entry["output"] = _RUNNERS[resolved["task"]](resolved, eff_tol, used_seed)
            entry["completed"] = True
        except Exception as exc:
            entry["output"] = {"error": f"{type(exc).__name__}: {exc}"}
            entry["completed"] = False
            all_completed = False
        entry["wall_time_s"] = round(time.perf_counter() - t0, 6)
        entries.append(entry)
    return {
        "report_version": REPORT_VERSION,
        "scenario": {
            "name": scenario.name,
            "source": scenario.source,
            "schema_version": scenario.raw["schema_version"],
        },
        "provenance": _provenance(used_seed),
        "tasks": entries,
        "all_tasks_completed": all_completed,
        "wall_time_s": round(time.perf_counter() - started, 6),
    }


_CSV_METRICS = (
    "verdict",
    "correctable",
    "residual",
    "value",
    "recovery_value",
    "environment_value",
    "difference",
    "duality_gap",
    "defect",
    "passed",
    "physical",
    "local",
    "strong",
)


def report_rows(report):
    """Flatten a report to rows for CSV output.

    Only scalar verdicts, fidelities, and residuals are kept; matrices
    and nested summaries need the JSON format.
    """
    rows = [("index", "task", "variant", "metric", "value", "tol")]
    for entry in report["tasks"]:
        output = entry.get("output", {})
        for metric in _CSV_METRICS:
            if metric in output:
                rows.append(
                    (
                        entry["index"],
                        entry["task"],
                        entry["variant"],
                        metric,
                        output[metric],
                        entry.get("tol"),
                    )
                )
        if not entry["completed"]:
            rows.append(
                (
                    entry["index"],
                    entry["task"],
                    entry["variant"],
                    "error",
                    output.get("error", "unknown"),
                    entry.get("tol"),
                )
            )
    return rows


# ---------------------------------------------------------------------------
# Demo scenario construction


def ring_demo_scenario(modes, unpaired, pairing=None, max_support=2):
    """Scenario dict for a Majorana ring demo.

    Builds the ring code with the given unpaired Majorana positions,
    applies geometric noise of the given maximal support, and checks
    correctability three ways: the plain algebraic conditions, the
    charge-sector-resolved conditions, and the locality-respecting
    conditions on the whole ring.  When ``pairing`` is omitted the
    leftover generators are paired along the ring, which requires every
    arc between unpaired positions to have even length.
    """
    modes = int(modes)
    n_maj = 2 * modes
    ups = [int(u) for u in unpaired]
    if len(set(ups)) != len(ups):
        raise ScenarioError("unpaired positions repeat")
    if any(not 1 <= u <= n_maj for u in ups):
        raise ScenarioError(f"unpaired positions must lie in 1..{n_maj}")
    if len(ups) < 2 or len(ups) % 2 != 0:
        raise ScenarioError("the number of unpaired positions must be even and at least 2")
    ups = sorted(ups)
    if pairing is None:
        pairing = []
        for here, nxt in zip(ups, ups[1:] + [ups[0] + n_maj]):
            arc = [(x - 1) % n_maj + 1 for x in range(here + 1, nxt)]
            if len(arc) % 2 != 0:
                raise ScenarioError(
                    f"arc between unpaired positions {here} and "
                    f"{(nxt - 1) % n_maj + 1} has odd length; give an "
                    "explicit pairing"
                )
            pairing.extend([arc[i], arc[i + 1]] for i in range(0, len(arc), 2))
    else:
        pairing = [[int(a), int(b)] for a, b in pairing]
    return {
        "schema_version": SCHEMA_VERSION,
        "name": f"majorana-ring-n{modes}",
        "system": {"kind": "fermion", "modes": modes},
        "channels": {
            "window_noise": {
                "kind": "geometric_noise",
                "max_support": int(max_support),
            }
        },
        "codes": {
            "ring": {
                "kind": "majorana_ring",
                "unpaired": ups,
                "pairing": pairing,
            }
        },
        "tasks": [
            {
                "task": "check",
                "variant": "kl",
                "code": "ring",
                "channel": "window_noise",
                "tol": 1e-10,
            },
            {
                "task": "check",
                "variant": "superselection-kl",
                "code": "ring",
                "channel": "window_noise",
                "projectors": "parity",
                "tol": 1e-10,
            },
            {
                "task": "check",
                "variant": "fermion-local",
                "code": "ring",
                "channel": "window_noise",
                "region": list(range(1, n_maj + 1)),
                "tol": 1e-10,
            },
        ],
    }
