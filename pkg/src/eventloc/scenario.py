"""Scenario documents: schema, validation, and construction of run objects.

A scenario is one JSON document describing a complete computation: momentum
grid, kernel, state, spacetime evaluation domain, requested outputs, seeds,
and tolerance overrides.  Validation runs in two passes.  The structural
pass is a JSON Schema check; the dimensional pass verifies the cross
references the schema cannot see (grid kind against dimension, component
counts, region bounds).  Both raise :class:`ScenarioError` carrying the
JSON path of the offending field, so batch callers can print a pointer
instead of a traceback.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .engine import EventRegion, SpacetimeGrid, TimeRadialGrid, spacetime_grid, time_radial_grid
from .grids import MassShellGrid, energy_grid_1d, shell_grid_2d, shell_grid_4d
from .kernels import KernelFamily, make_kernel
from .states import WaveFunction, make_orthonormal_basis, make_test_state

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}
_PAIR = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_COMPLEXISH = {"oneOf": [_NUM, _PAIR]}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["name", "dimension", "grid", "kernel", "state", "domain"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "pattern": r"^[A-Za-z0-9._\-]+$"},
        "dimension": {"enum": [1, 2, 4]},
        "seed": {"type": "integer", "minimum": 0},
        "grid": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["energy_line", "shell_plane", "shell_spherical"]},
                "window": _PAIR,
                "n_nodes": _POS_INT,
                "rule": {"enum": ["uniform", "gauss"]},
                "mass_window": _PAIR,
                "n_mass": _POS_INT,
                "rapidity_half_width": {"type": "number", "exclusiveMinimum": 0},
                "rapidity_max": {"type": "number", "exclusiveMinimum": 0},
                "n_rapidity": _POS_INT,
                "l_max": {"type": "integer", "minimum": 0},
            },
        },
        "kernel": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["trivial", "dft", "random", "table"]},
                "n_sigma": _POS_INT,
                "n_gamma": _POS_INT,
                "phase_coeffs": {"type": "array", "items": _NUM},
                "q_values": {"type": "array", "items": _NUM},
                "seed": {"type": "integer", "minimum": 0},
                "weights": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "F": {"type": "array"},
                "mode": {"enum": ["normalized", "subnormalized"]},
                "scale": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            },
        },
        "state": {
            "type": "object",
            "required": ["family"],
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["gaussian", "gaussian_lm", "random"]},
                "center": {"oneOf": [_NUM, _PAIR]},
                "width": {"oneOf": [{"type": "number", "exclusiveMinimum": 0}, _PAIR]},
                "channel_weights": {"type": "array", "items": _COMPLEXISH, "minItems": 1},
                "components": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["l", "n", "center", "width"],
                        "additionalProperties": False,
                        "properties": {
                            "l": {"type": "integer", "minimum": 0},
                            "n": {"type": "integer"},
                            "center": _PAIR,
                            "width": _PAIR,
                            "weight": _COMPLEXISH,
                        },
                    },
                },
                "seed": {"type": "integer", "minimum": 0},
                "channels": _POS_INT,
            },
        },
        "domain": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["box", "time_radial"]},
                "bounds": {"type": "array", "items": _PAIR, "minItems": 1, "maxItems": 2},
                "shape": {"type": "array", "items": _POS_INT, "minItems": 1, "maxItems": 2},
                "t_window": _PAIR,
                "n_t": _POS_INT,
                "r_max": {"type": "number", "exclusiveMinimum": 0},
                "n_r": _POS_INT,
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "density": {"type": "boolean"},
                "moments": {"type": "boolean"},
                "verify": {"type": "boolean"},
                "probability_regions": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["lo", "hi"],
                        "additionalProperties": False,
                        "properties": {
                            "lo": {"type": "array", "items": _NUM, "minItems": 1, "maxItems": 4},
                            "hi": {"type": "array", "items": _NUM, "minItems": 1, "maxItems": 4},
                        },
                    },
                },
                "tau_matrix": {
                    "type": "object",
                    "required": ["n_basis", "region"],
                    "additionalProperties": False,
                    "properties": {
                        "n_basis": {"type": "integer", "minimum": 2},
                        "basis_center": _NUM,
                        "basis_width": {"type": "number", "exclusiveMinimum": 0},
                        "n_channels": _POS_INT,
                        "region": {
                            "type": "object",
                            "required": ["lo", "hi"],
                            "additionalProperties": False,
                            "properties": {
                                "lo": {"type": "array", "items": _NUM},
                                "hi": {"type": "array", "items": _NUM},
                            },
                        },
                    },
                },
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "normalization": {"type": "number", "exclusiveMinimum": 0},
                "translation": {"type": "number", "exclusiveMinimum": 0},
                "boost": {"type": "number", "exclusiveMinimum": 0},
                "rotation": {"type": "number", "exclusiveMinimum": 0},
                "moment_shift": {"type": "number", "exclusiveMinimum": 0},
                "conjugation": {"type": "number", "exclusiveMinimum": 0},
                "isometry": {"type": "number", "exclusiveMinimum": 0},
                "oracle": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "shift": {"type": "array", "items": _NUM, "minItems": 1, "maxItems": 4},
        "boost": _NUM,
        "rotation": {
            "type": "object",
            "required": ["axis", "angle"],
            "additionalProperties": False,
            "properties": {
                "axis": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3},
                "angle": _NUM,
            },
        },
    },
}

_GRID_KIND_FOR_DIM = {1: "energy_line", 2: "shell_plane", 4: "shell_spherical"}


class ScenarioError(ValueError):
    """Scenario document rejected; path points at the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _schema_check(doc: dict) -> None:
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), str(e.absolute_path)))
    if errors:
        best = jsonschema.exceptions.best_match(errors)
        path = ".".join(str(p) for p in best.absolute_path) or "(document root)"
        raise ScenarioError(path, best.message)


def _require(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ScenarioError(path, message)


def _dimensional_check(doc: dict) -> None:
    dim = doc["dimension"]
    grid = doc["grid"]
    want = _GRID_KIND_FOR_DIM[dim]
    _require(grid["kind"] == want, "grid.kind", f"dimension {dim} needs grid kind {want!r}")
    if want == "energy_line":
        for key in ("window", "n_nodes"):
            _require(key in grid, f"grid.{key}", "required for energy_line")
    elif want == "shell_plane":
        for key in ("mass_window", "n_mass", "rapidity_half_width", "n_rapidity"):
            _require(key in grid, f"grid.{key}", "required for shell_plane")
    else:
        for key in ("mass_window", "n_mass", "rapidity_max", "n_rapidity", "l_max"):
            _require(key in grid, f"grid.{key}", "required for shell_spherical")
        _require("rule" not in grid, "grid.rule", "spherical grids fix their own rule")
    for key in ("window", "mass_window"):
        if key in grid:
            lo, hi = grid[key]
            _require(0 < lo < hi, f"grid.{key}", "need 0 < lower < upper")

    kern = doc["kernel"]
    if dim >= 2 and kern["kind"] in ("trivial", "dft", "table"):
        _require("q_values" in kern, "kernel.q_values", f"required for d={dim}")
    if kern["kind"] == "dft":
        _require("n_sigma" in kern, "kernel.n_sigma", "required for dft")
    if kern["kind"] == "random":
        # seed falls back to the document-level one
        _require("n_sigma" in kern, "kernel.n_sigma", "required for random")
    if kern["kind"] == "table":
        _require("F" in kern, "kernel.F", "required for table")

    state = doc["state"]
    fam = state["family"]
    if fam == "gaussian":
        _require(dim in (1, 2), "state.family", f"gaussian needs dimension 1 or 2, not {dim}")
        for key in ("center", "width"):
            _require(key in state, f"state.{key}", "required for gaussian")
            is_pair = isinstance(state[key], list)
            _require(is_pair == (dim == 2), f"state.{key}",
                     "scalar for d=1, [mass, rapidity] pair for d=2")
    elif fam == "gaussian_lm":
        _require(dim == 4, "state.family", "gaussian_lm is the d=4 family")
        _require("components" in state, "state.components", "required for gaussian_lm")
        l_max = grid["l_max"]
        for i, comp in enumerate(state["components"]):
            _require(comp["l"] <= l_max, f"state.components.{i}.l",
                     f"exceeds grid l_max={l_max}")
            _require(abs(comp["n"]) <= comp["l"], f"state.components.{i}.n",
                     "needs |n| <= l")
    else:
        # random family; its seed falls back to the document-level one
        pass

    dom = doc["domain"]
    if dim == 4:
        _require(dom["kind"] == "time_radial", "domain.kind", "d=4 uses time_radial")
        for key in ("t_window", "n_t", "r_max", "n_r"):
            _require(key in dom, f"domain.{key}", "required for time_radial")
    else:
        _require(dom["kind"] == "box", "domain.kind", f"d={dim} uses box")
        for key in ("bounds", "shape"):
            _require(key in dom, f"domain.{key}", "required for box")
        _require(len(dom["bounds"]) == dim, "domain.bounds", f"need {dim} axis ranges")
        _require(len(dom["shape"]) == dim, "domain.shape", f"need {dim} axis sizes")
        for i, (lo, hi) in enumerate(dom["bounds"]):
            _require(lo < hi, f"domain.bounds.{i}", "need lower < upper")

    outputs = doc.get("outputs", {})
    for i, reg in enumerate(outputs.get("probability_regions", [])):
        for key in ("lo", "hi"):
            _require(len(reg[key]) == dim, f"outputs.probability_regions.{i}.{key}",
                     f"need {dim} components")
        _require(all(a < b for a, b in zip(reg["lo"], reg["hi"])),
                 f"outputs.probability_regions.{i}", "need lo < hi componentwise")
    if "tau_matrix" in outputs:
        tau = outputs["tau_matrix"]
        for key in ("lo", "hi"):
            _require(len(tau["region"][key]) == dim, f"outputs.tau_matrix.region.{key}",
                     f"need {dim} components")
    if "shift" in doc:
        _require(len(doc["shift"]) == dim, "shift", f"need {dim} components")
    if "boost" in doc:
        _require(dim == 2, "boost", "boost covariance is implemented for d=2")
    if "rotation" in doc:
        _require(dim == 4, "rotation", "rotation covariance is implemented for d=4")


def validate_scenario(doc: dict) -> None:
    """Raise ScenarioError (with a field path) if the document is invalid."""
    _schema_check(doc)
    _dimensional_check(doc)


@dataclass(frozen=True)
class BuiltScenario:
    """All run objects constructed from one validated scenario document."""

    name: str
    dimension: int
    seed: int
    grid: MassShellGrid
    kernel: KernelFamily
    state: WaveFunction
    domain: SpacetimeGrid | TimeRadialGrid
    regions: tuple[EventRegion, ...]
    tau_basis: list | None
    tau_region: EventRegion | None
    outputs: dict
    tolerances: dict
    shift: tuple[float, ...] | None
    boost: float | None
    rotation: dict | None


@dataclass(frozen=True)
class Scenario:
    doc: dict = field(repr=False)
    name: str
    dimension: int

    @classmethod
    def from_dict(cls, doc: dict) -> "Scenario":
        validate_scenario(doc)
        return cls(doc=doc, name=doc["name"], dimension=doc["dimension"])

    @classmethod
    def from_file(cls, path) -> "Scenario":
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ScenarioError("(document root)", f"not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ScenarioError("(document root)", "top level must be an object")
        return cls.from_dict(doc)

    def build(self) -> BuiltScenario:
        doc = self.doc
        dim = self.dimension
        seed = doc.get("seed", 0)
        grid = build_grid(doc["grid"], dim)
        kern_spec = dict(doc["kernel"])
        if kern_spec["kind"] == "random":
            kern_spec.setdefault("seed", seed)
        kernel = make_kernel(grid, kern_spec)
        state_spec = _complexified_state(doc["state"])
        if state_spec["family"] == "random":
            state_spec.setdefault("seed", seed)
        state = make_test_state(grid, state_spec)
        domain = build_domain(doc["domain"], dim)
        outputs = doc.get("outputs", {})
        regions = tuple(
            EventRegion.box(reg["lo"], reg["hi"])
            for reg in outputs.get("probability_regions", [])
        )
        tau_basis = tau_region = None
        if "tau_matrix" in outputs:
            tau = outputs["tau_matrix"]
            tau_basis = make_orthonormal_basis(
                grid,
                tau["n_basis"],
                tau.get("basis_center", float(np.mean(grid.masses))),
                tau.get("basis_width", 0.5),
                n_channels=tau.get("n_channels", kernel.n_sigma),
            )
            tau_region = EventRegion.box(tau["region"]["lo"], tau["region"]["hi"])
        return BuiltScenario(
            name=self.name,
            dimension=dim,
            seed=seed,
            grid=grid,
            kernel=kernel,
            state=state,
            domain=domain,
            regions=regions,
            tau_basis=tau_basis,
            tau_region=tau_region,
            outputs=outputs,
            tolerances=dict(doc.get("tolerances", {})),
            shift=tuple(doc["shift"]) if "shift" in doc else None,
            boost=doc.get("boost"),
            rotation=doc.get("rotation"),
        )


def _as_complex(v) -> complex:
    # JSON has no complex literal; a [re, im] pair stands in for one
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def _complexified_state(spec: dict) -> dict:
    out = dict(spec)
    if "channel_weights" in out:
        out["channel_weights"] = [_as_complex(v) for v in out["channel_weights"]]
    if "components" in out:
        comps = []
        for comp in out["components"]:
            comp = dict(comp)
            if "weight" in comp:
                comp["weight"] = _as_complex(comp["weight"])
            comps.append(comp)
        out["components"] = comps
    return out


def build_grid(spec: dict, dimension: int) -> MassShellGrid:
    if dimension == 1:
        lo, hi = spec["window"]
        return energy_grid_1d(lo, hi, spec["n_nodes"], rule=spec.get("rule", "uniform"))
    if dimension == 2:
        return shell_grid_2d(
            tuple(spec["mass_window"]),
            spec["n_mass"],
            spec["rapidity_half_width"],
            spec["n_rapidity"],
            rule=spec.get("rule", "gauss"),
        )
    return shell_grid_4d(
        tuple(spec["mass_window"]),
        spec["n_mass"],
        spec["rapidity_max"],
        spec["n_rapidity"],
        spec["l_max"],
    )


def build_domain(spec: dict, dimension: int) -> SpacetimeGrid | TimeRadialGrid:
    if spec["kind"] == "box":
        return spacetime_grid([tuple(b) for b in spec["bounds"]], list(spec["shape"]))
    t_lo, t_hi = spec["t_window"]
    return time_radial_grid(t_lo, t_hi, spec["n_t"], spec["r_max"], spec["n_r"])


def packaged_scenario_names() -> list[str]:
    """Names of the scenario documents shipped inside the package."""
    root = resources.files("eventloc.data") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_scenario(name_or_path: str | Path) -> Scenario:
    """Load a scenario by packaged name or by file path.

    A bare name (no path separator, no .json suffix matching an existing
    file) is resolved against the packaged reference set.
    """
    p = Path(name_or_path)
    if p.suffix == ".json" or p.exists():
        return Scenario.from_file(p)
    root = resources.files("eventloc.data") / "scenarios"
    candidate = root / f"{name_or_path}.json"
    if not candidate.is_file():
        known = ", ".join(packaged_scenario_names())
        raise ScenarioError("(scenario)", f"no packaged scenario {name_or_path!r}; known: {known}")
    with candidate.open(encoding="utf-8") as fh:
        return Scenario.from_dict(json.load(fh))
