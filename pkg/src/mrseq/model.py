"""Sequence document model: scanner profile, blocks, groups, and JSON (de)serialization.

A sequence file is a single JSON document with schema version field
``"mrseq_version": 1``.  Every numeric block field is an expression string
(see :mod:`mrseq.expr`); evaluation happens at flatten time.  ``load``/``save``
round-trip canonically and reject unknown fields.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields as dc_fields

from mrseq import expr as ex

__all__ = [
    "Scanner",
    "RfPulse",
    "Gradient",
    "Delay",
    "Readout",
    "EpiAcq",
    "GroupRef",
    "Block",
    "GroupDef",
    "SequenceDoc",
    "SchemaError",
    "load",
    "save",
    "loads",
    "dumps",
]

SCHEMA_VERSION = 1

AXES = ("x", "y", "z")


class SchemaError(Exception):
    """A document violates the file schema; ``path`` points at the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
        self.message = message


@dataclass(frozen=True)
class Scanner:
    """Hardware limits the sequence is validated against.

    b0 [T], max_rf_amp [T] (peak B1), max_grad [T/m], max_slew [T/m/s],
    adc_dead_time [s].
    """

    b0: float = 3.0
    max_rf_amp: float = 50e-6
    max_grad: float = 45e-3
    max_slew: float = 200.0
    adc_dead_time: float = 0.0

    def __post_init__(self):
        for name in ("b0", "max_rf_amp", "max_grad", "max_slew"):
            if not getattr(self, name) > 0:
                raise ValueError(f"scanner.{name} must be strictly positive")
        if self.adc_dead_time < 0:
            raise ValueError("scanner.adc_dead_time must be >= 0")


# ---------------------------------------------------------------------------
# Blocks.  Expression-valued fields are strings; enums are plain strings.


@dataclass(frozen=True)
class RfPulse:
    """RF excitation block; ``flip_angle``/``phase`` in degrees, ``duration`` seconds.

    ``shape`` is "hard" or "sinc"; a sinc pulse has ``sinc_lobes`` side lobes
    and is Hann-apodized.  A non-"none" ``slice_grad_axis`` plays a flat
    gradient of ``slice_grad_amp`` [T/m] during the pulse (with slew-derived
    ramps around it).
    """

    flip_angle: str
    duration: str
    shape: str = "hard"
    freq_offset: str = "0"
    phase: str = "0"
    sinc_lobes: str = "3"
    slice_grad_axis: str = "none"
    slice_grad_amp: str = "0"


@dataclass(frozen=True)
class Gradient:
    """Trapezoidal gradient; flat-top amplitudes [T/m] per axis.

    ``rise_time`` of 0 means "derive from the slew limit".
    """

    flat_duration: str
    gx: str = "0"
    gy: str = "0"
    gz: str = "0"
    rise_time: str = "0"


@dataclass(frozen=True)
class Delay:
    duration: str


@dataclass(frozen=True)
class Readout:
    """ADC window of ``samples`` points over ``duration`` seconds with a flat
    read gradient on ``read_grad_axis``.

    ``line_tag`` assigns the k-space row used by reconstruction.  A negative
    ``read_grad_amp`` acquires the line in reversed sample order, which
    reconstruction undoes.
    """

    samples: str
    duration: str
    read_grad_axis: str
    read_grad_amp: str
    line_tag: str = "0"


@dataclass(frozen=True)
class EpiAcq:
    """Single-shot Cartesian EPI macro: expands into alternating readouts and
    phase blips fully covering an ``n_lines`` x ``samples_per_line`` grid over
    ``fov`` meters."""

    n_lines: str
    samples_per_line: str
    fov: str
    read_axis: str = "x"
    phase_axis: str = "y"


@dataclass(frozen=True)
class GroupRef:
    group: str
    repetitions: str = "1"


Block = RfPulse | Gradient | Delay | Readout | EpiAcq | GroupRef


@dataclass(frozen=True)
class GroupDef:
    name: str
    blocks: tuple[Block, ...]


@dataclass
class SequenceDoc:
    """The editable sequence: blocks, group definitions, variables, scanner."""

    blocks: list[Block] = field(default_factory=list)
    groups: list[GroupDef] = field(default_factory=list)
    variables: dict[str, str] = field(default_factory=dict)
    scanner: Scanner = field(default_factory=Scanner)
    description: str = ""

    def group_map(self) -> dict[str, GroupDef]:
        return {g.name: g for g in self.groups}

    def scope(self) -> ex.VariableScope:
        return ex.VariableScope.from_strings(self.variables)

    def check_invariants(self) -> None:
        """Structural checks that do not require expression evaluation."""
        names = [g.name for g in self.groups]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(".groups", f"duplicate group name(s): {', '.join(dup)}")
        gmap = self.group_map()

        def walk_refs(blocks: tuple[Block, ...] | list[Block], stack: tuple[str, ...]):
            for b in blocks:
                if isinstance(b, GroupRef):
                    if b.group not in gmap:
                        raise SchemaError(".blocks", f"reference to undefined group {b.group!r}")
                    if b.group in stack:
                        cycle = " -> ".join(stack[stack.index(b.group):] + (b.group,))
                        raise SchemaError(".groups", f"cyclic group reference: {cycle}")
                    walk_refs(gmap[b.group].blocks, stack + (b.group,))

        walk_refs(self.blocks, ())
        reserved = set(ex.BASE_RESERVED) | {f"rep_{g}" for g in gmap}
        for name in self.variables:
            if not ex.is_valid_name(name):
                raise SchemaError(f".variables.{name}", "invalid variable name")
            if name in reserved:
                raise SchemaError(f".variables.{name}", "shadows a reserved name")
        for name, src in self.variables.items():
            try:
                ex.parse(src)
            except ex.ExprSyntaxError as e:
                raise SchemaError(f".variables.{name}", str(e)) from e


# ---------------------------------------------------------------------------
# JSON schema

_BLOCK_TYPES: dict[str, type] = {
    "rf_pulse": RfPulse,
    "gradient": Gradient,
    "delay": Delay,
    "readout": Readout,
    "epi_acq": EpiAcq,
    "group_ref": GroupRef,
}
_TYPE_NAMES = {cls: name for name, cls in _BLOCK_TYPES.items()}

# Fields holding enum strings rather than expressions.
_ENUM_FIELDS = {
    ("rf_pulse", "shape"): ("hard", "sinc"),
    ("rf_pulse", "slice_grad_axis"): ("none", "x", "y", "z"),
    ("readout", "read_grad_axis"): AXES,
    ("epi_acq", "read_axis"): AXES,
    ("epi_acq", "phase_axis"): AXES,
}


def _expr_string(value, path: str) -> str:
    if isinstance(value, bool):
        raise SchemaError(path, "expected an expression string or number")
    if isinstance(value, (int, float)):
        value = repr(float(value)) if isinstance(value, float) else str(value)
    if not isinstance(value, str):
        raise SchemaError(path, "expected an expression string or number")
    try:
        ex.parse(value)
    except ex.ExprSyntaxError as e:
        raise SchemaError(path, str(e)) from e
    return value


def _block_from_json(obj, path: str) -> Block:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected a block object")
    kind = obj.get("type")
    if kind not in _BLOCK_TYPES:
        raise SchemaError(f"{path}.type", f"unknown block variant {kind!r}")
    cls = _BLOCK_TYPES[kind]
    spec = {f.name: f for f in dc_fields(cls)}
    kwargs = {}
    for key, value in obj.items():
        if key == "type":
            continue
        if key not in spec:
            raise SchemaError(f"{path}.{key}", f"unknown field for block {kind!r}")
        if (kind, key) in _ENUM_FIELDS:
            allowed = _ENUM_FIELDS[(kind, key)]
            if value not in allowed:
                raise SchemaError(f"{path}.{key}", f"must be one of {allowed}")
            kwargs[key] = value
        elif key == "group":
            if not isinstance(value, str):
                raise SchemaError(f"{path}.{key}", "expected a group name string")
            kwargs[key] = value
        else:
            kwargs[key] = _expr_string(value, f"{path}.{key}")
    for f in dc_fields(cls):
        if f.name not in kwargs and f.default is dataclasses.MISSING:
            raise SchemaError(f"{path}.{f.name}", "missing required field")
    return cls(**kwargs)


def _block_to_json(block: Block) -> dict:
    out = {"type": _TYPE_NAMES[type(block)]}
    for f in dc_fields(type(block)):
        out[f.name] = getattr(block, f.name)
    return out


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise SchemaError(f"{path}.{key}", "missing required field")
    return obj[key]


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, "expected a number")
    return float(value)


def _scanner_from_json(obj, path: str) -> Scanner:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected a scanner object")
    known = {f.name for f in dc_fields(Scanner)}
    for key in obj:
        if key not in known:
            raise SchemaError(f"{path}.{key}", "unknown field")
    kwargs = {}
    for name in ("b0", "max_rf_amp", "max_grad", "max_slew"):
        kwargs[name] = _number(_require(obj, name, path), f"{path}.{name}")
    kwargs["adc_dead_time"] = _number(obj.get("adc_dead_time", 0.0), f"{path}.adc_dead_time")
    try:
        return Scanner(**kwargs)
    except ValueError as e:
        raise SchemaError(path, str(e)) from e


def doc_from_json(obj) -> SequenceDoc:
    """Build a SequenceDoc from parsed JSON, strictly validating the schema."""
    if not isinstance(obj, dict):
        raise SchemaError(".", "expected a JSON object")
    version = obj.get("mrseq_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(
            ".mrseq_version",
            f"unsupported or missing schema version {version!r} (this build reads version {SCHEMA_VERSION})",
        )
    allowed = {"mrseq_version", "description", "scanner", "variables", "groups", "blocks"}
    for key in obj:
        if key not in allowed:
            raise SchemaError(f".{key}", "unknown field")

    scanner = _scanner_from_json(_require(obj, "scanner", ""), ".scanner")

    variables_obj = obj.get("variables", {})
    if not isinstance(variables_obj, dict):
        raise SchemaError(".variables", "expected an object of name -> expression")
    variables = {
        name: _expr_string(value, f".variables.{name}") for name, value in variables_obj.items()
    }

    groups = []
    groups_obj = obj.get("groups", [])
    if not isinstance(groups_obj, list):
        raise SchemaError(".groups", "expected a list")
    for i, g in enumerate(groups_obj):
        gpath = f".groups[{i}]"
        if not isinstance(g, dict):
            raise SchemaError(gpath, "expected a group object")
        for key in g:
            if key not in ("name", "blocks"):
                raise SchemaError(f"{gpath}.{key}", "unknown field")
        name = _require(g, "name", gpath)
        if not isinstance(name, str) or not ex.is_valid_name(name):
            raise SchemaError(f"{gpath}.name", "invalid group name")
        blocks_obj = _require(g, "blocks", gpath)
        if not isinstance(blocks_obj, list):
            raise SchemaError(f"{gpath}.blocks", "expected a list")
        blocks = tuple(
            _block_from_json(b, f"{gpath}.blocks[{j}]") for j, b in enumerate(blocks_obj)
        )
        groups.append(GroupDef(name, blocks))

    blocks_obj = obj.get("blocks", [])
    if not isinstance(blocks_obj, list):
        raise SchemaError(".blocks", "expected a list")
    blocks = [_block_from_json(b, f".blocks[{i}]") for i, b in enumerate(blocks_obj)]

    description = obj.get("description", "")
    if not isinstance(description, str):
        raise SchemaError(".description", "expected a string")

    doc = SequenceDoc(
        blocks=blocks,
        groups=groups,
        variables=variables,
        scanner=scanner,
        description=description,
    )
    doc.check_invariants()
    return doc


def doc_to_json(doc: SequenceDoc) -> dict:
    return {
        "mrseq_version": SCHEMA_VERSION,
        "description": doc.description,
        "scanner": {f.name: getattr(doc.scanner, f.name) for f in dc_fields(Scanner)},
        "variables": dict(doc.variables),
        "groups": [
            {"name": g.name, "blocks": [_block_to_json(b) for b in g.blocks]}
            for g in doc.groups
        ],
        "blocks": [_block_to_json(b) for b in doc.blocks],
    }


def dumps(doc: SequenceDoc) -> str:
    """Canonical JSON text: sorted keys, 2-space indent, trailing newline."""
    return json.dumps(doc_to_json(doc), indent=2, sort_keys=True) + "\n"


def loads(text: str | bytes) -> SequenceDoc:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(".", f"not valid JSON: {e}") from e
    return doc_from_json(obj)


def save(doc: SequenceDoc) -> bytes:
    return dumps(doc).encode("utf-8")


def load(data: bytes | str) -> SequenceDoc:
    return loads(data)
