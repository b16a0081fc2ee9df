"""Three-layer skill record model.

A record has exactly three top-level collections: one skill-level
scheduling record, a list of scenes (phase graph), and a list of logic
steps (atomic-action graph). Containment and entry pointers tie the
layers together: scenes belong to the skill via ``subscenes``, steps
belong to scenes via ``contained_logic_steps``, and traversal starts at
``entry_scene_id`` / ``entry_logic_step_id``.

Documents are immutable after construction; no function here mutates
one in place. Parsing checks local shape only (field presence, kinds,
closed vocabularies); cross-record graph checks live in
:mod:`sslkit.validation`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .errors import (
    DanglingTarget,
    MalformedSyntax,
    MissingField,
    UnexpectedField,
    UnknownEnumValue,
    WrongKind,
    WrongLayerTerminal,
)

VARIABLE_PREFIX = "$"


class SceneType(str, Enum):
    PREPARE = "PREPARE"
    ACQUIRE = "ACQUIRE"
    REASON = "REASON"
    ACT = "ACT"
    VERIFY = "VERIFY"
    RECOVER = "RECOVER"
    FINALIZE = "FINALIZE"


class ActType(str, Enum):
    READ = "READ"
    SELECT = "SELECT"
    COMPARE = "COMPARE"
    VALIDATE = "VALIDATE"
    INFER = "INFER"
    WRITE = "WRITE"
    UPDATE_STATE = "UPDATE_STATE"
    CALL_TOOL = "CALL_TOOL"
    REQUEST = "REQUEST"
    TRANSFER = "TRANSFER"
    NOTIFY = "NOTIFY"
    TERMINATE = "TERMINATE"


class ResourceScope(str, Enum):
    MEMORY = "MEMORY"
    LOCAL_FS = "LOCAL_FS"
    CODEBASE = "CODEBASE"
    PROCESS = "PROCESS"
    USER_DATA = "USER_DATA"
    CREDENTIALS = "CREDENTIALS"
    NETWORK = "NETWORK"
    OTHER = "OTHER"


class TerminalTarget(str, Enum):
    """Reserved transition outcomes.

    END_* close the scene graph; YIELD_* return control from a logic
    graph to its enclosing scene. Mixing layers is an error.
    """

    END_SUCCESS = "END_SUCCESS"
    END_FAIL = "END_FAIL"
    YIELD_SUCCESS = "YIELD_SUCCESS"
    YIELD_FAIL = "YIELD_FAIL"


SCENE_TERMINALS = frozenset({TerminalTarget.END_SUCCESS, TerminalTarget.END_FAIL})
LOGIC_TERMINALS = frozenset({TerminalTarget.YIELD_SUCCESS, TerminalTarget.YIELD_FAIL})
_TERMINAL_TOKENS = frozenset(t.value for t in TerminalTarget)


@dataclass(frozen=True)
class TransitionRule:
    condition: str
    target: str  # node identifier or terminal token


@dataclass(frozen=True)
class IoField:
    name: str
    type: str  # free-text type label, e.g. "str", "list"


@dataclass(frozen=True)
class Dependency:
    type: str  # e.g. "permission", "capability"
    value: str


@dataclass(frozen=True)
class ControlFlowFeatures:
    has_branch: bool
    has_loop: bool
    has_tool_call: bool
    touches_sensitive_resources: bool


@dataclass(frozen=True)
class SkillRecord:
    skill_id: str
    skill_name: str
    skill_goal: str
    top_pattern: str
    expected_inputs: list[IoField]
    expected_outputs: list[IoField]
    dependencies: list[Dependency]
    tags: list[str]
    intent_signature: list[str]
    control_flow_features: ControlFlowFeatures
    entry_scene_id: str
    subscenes: list[str]


@dataclass(frozen=True)
class Scene:
    scene_id: str
    scene_name: str
    scene_type: SceneType
    scene_goal: str
    input: list[str]
    output: list[str]
    entry_conditions: list[str]
    exit_conditions: list[str]
    entry_logic_step_id: str
    contained_logic_steps: list[str]
    next_scene_rules: list[TransitionRule]


@dataclass(frozen=True)
class LogicStep:
    logic_step_id: str
    act_type: ActType
    input_args: list[str]
    output_binding: str | None
    actor: str
    object: str
    instrument: str | None
    preconditions: list[str]
    effects: list[str]
    resource_scope: ResourceScope
    resource_target: str
    next_step_rules: list[TransitionRule]


@dataclass(frozen=True)
class SslDocument:
    skill: SkillRecord
    scenes: list[Scene]
    logic_steps: list[LogicStep]

    def scene_by_id(self) -> dict[str, Scene]:
        return {s.scene_id: s for s in self.scenes}

    def step_by_id(self) -> dict[str, LogicStep]:
        return {s.logic_step_id: s for s in self.logic_steps}


# Resolved transition references.


@dataclass(frozen=True)
class SceneRef:
    scene_id: str


@dataclass(frozen=True)
class StepRef:
    logic_step_id: str


@dataclass(frozen=True)
class TerminalRef:
    kind: TerminalTarget


ResolvedTarget = SceneRef | StepRef | TerminalRef


def is_variable(token: str) -> bool:
    """True iff ``token`` is a data-flow variable (``$``-prefixed).

    Unprefixed strings are literal labels, resources, or conditions.
    """
    return token.startswith(VARIABLE_PREFIX)


def resolve_target(
    doc: SslDocument, target: str, *, scene_id: str | None = None
) -> ResolvedTarget:
    """Resolve a transition target in scene scope or logic scope.

    With ``scene_id=None`` the target is resolved against the scene
    graph: it must name a subscene or be END_SUCCESS/END_FAIL. With a
    ``scene_id`` it is resolved against that scene's contained logic
    steps or be YIELD_SUCCESS/YIELD_FAIL.

    Raises DanglingTarget for unresolvable names and WrongLayerTerminal
    when a terminal from the other layer is used.
    """
    if scene_id is None:
        scope = "scene-graph"
        if target in _TERMINAL_TOKENS:
            kind = TerminalTarget(target)
            if kind in LOGIC_TERMINALS:
                raise WrongLayerTerminal(target, scope)
            return TerminalRef(kind)
        if target in doc.skill.subscenes:
            return SceneRef(target)
        raise DanglingTarget(target, scope)

    scope = f"logic-graph-of({scene_id})"
    scene = doc.scene_by_id().get(scene_id)
    if scene is None:
        raise DanglingTarget(target, scope)
    if target in _TERMINAL_TOKENS:
        kind = TerminalTarget(target)
        if kind in SCENE_TERMINALS:
            raise WrongLayerTerminal(target, scope)
        return TerminalRef(kind)
    if target in scene.contained_logic_steps:
        return StepRef(target)
    raise DanglingTarget(target, scope)


# --- parsing -------------------------------------------------------------


def _require_object(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise WrongKind(path, "expected an object")
    return value


def _reject_extras(obj: dict, allowed: tuple[str, ...], path: str) -> None:
    for key in obj:
        if key not in allowed:
            raise UnexpectedField(f"{path}.{key}" if path else key)


def _get(obj: dict, key: str, path: str) -> Any:
    if key not in obj:
        raise MissingField(f"{path}.{key}" if path else key)
    return obj[key]


def _string(value: Any, path: str, nonempty: bool = False) -> str:
    if not isinstance(value, str):
        raise WrongKind(path, "expected a string")
    if nonempty and not value:
        raise WrongKind(path, "expected a nonempty string")
    return value


def _opt_string(value: Any, path: str) -> str | None:
    if value is None:
        return None
    return _string(value, path)


def _bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise WrongKind(path, "expected a boolean")
    return value


def _list(value: Any, path: str, nonempty: bool = False) -> list:
    if not isinstance(value, list):
        raise WrongKind(path, "expected a list")
    if nonempty and not value:
        raise WrongKind(path, "expected a nonempty list")
    return value


def _string_list(value: Any, path: str, nonempty: bool = False, items_nonempty: bool = False) -> list[str]:
    items = _list(value, path, nonempty)
    return [
        _string(v, f"{path}[{i}]", nonempty=items_nonempty) for i, v in enumerate(items)
    ]


def _enum(enum_cls: type, value: Any, path: str):
    if not isinstance(value, str):
        raise WrongKind(path, "expected an enum string")
    try:
        return enum_cls(value)
    except ValueError:
        raise UnknownEnumValue(path, value) from None


def _transition_rules(value: Any, path: str) -> list[TransitionRule]:
    rules = []
    for i, item in enumerate(_list(value, path, nonempty=True)):
        rule_path = f"{path}[{i}]"
        obj = _require_object(item, rule_path)
        _reject_extras(obj, ("condition", "target"), rule_path)
        rules.append(
            TransitionRule(
                condition=_string(_get(obj, "condition", rule_path), f"{rule_path}.condition", nonempty=True),
                target=_string(_get(obj, "target", rule_path), f"{rule_path}.target", nonempty=True),
            )
        )
    return rules


def _io_fields(value: Any, path: str) -> list[IoField]:
    fields = []
    for i, item in enumerate(_list(value, path)):
        item_path = f"{path}[{i}]"
        obj = _require_object(item, item_path)
        _reject_extras(obj, ("name", "type"), item_path)
        fields.append(
            IoField(
                name=_string(_get(obj, "name", item_path), f"{item_path}.name", nonempty=True),
                type=_string(_get(obj, "type", item_path), f"{item_path}.type"),
            )
        )
    return fields


def _dependencies(value: Any, path: str) -> list[Dependency]:
    deps = []
    for i, item in enumerate(_list(value, path)):
        item_path = f"{path}[{i}]"
        obj = _require_object(item, item_path)
        _reject_extras(obj, ("type", "value"), item_path)
        deps.append(
            Dependency(
                type=_string(_get(obj, "type", item_path), f"{item_path}.type", nonempty=True),
                value=_string(_get(obj, "value", item_path), f"{item_path}.value", nonempty=True),
            )
        )
    return deps


_CFF_FIELDS = ("has_branch", "has_loop", "has_tool_call", "touches_sensitive_resources")


def _control_flow(value: Any, path: str) -> ControlFlowFeatures:
    obj = _require_object(value, path)
    _reject_extras(obj, _CFF_FIELDS, path)
    return ControlFlowFeatures(
        **{f: _bool(_get(obj, f, path), f"{path}.{f}") for f in _CFF_FIELDS}
    )


_SKILL_FIELDS = (
    "skill_id",
    "skill_name",
    "skill_goal",
    "top_pattern",
    "expected_inputs",
    "expected_outputs",
    "dependencies",
    "tags",
    "intent_signature",
    "control_flow_features",
    "entry_scene_id",
    "subscenes",
)


def _parse_skill(value: Any, path: str) -> SkillRecord:
    obj = _require_object(value, path)
    _reject_extras(obj, _SKILL_FIELDS, path)
    return SkillRecord(
        skill_id=_string(_get(obj, "skill_id", path), f"{path}.skill_id", nonempty=True),
        skill_name=_string(_get(obj, "skill_name", path), f"{path}.skill_name"),
        skill_goal=_string(_get(obj, "skill_goal", path), f"{path}.skill_goal"),
        top_pattern=_string(_get(obj, "top_pattern", path), f"{path}.top_pattern"),
        expected_inputs=_io_fields(_get(obj, "expected_inputs", path), f"{path}.expected_inputs"),
        expected_outputs=_io_fields(_get(obj, "expected_outputs", path), f"{path}.expected_outputs"),
        dependencies=_dependencies(_get(obj, "dependencies", path), f"{path}.dependencies"),
        tags=_string_list(_get(obj, "tags", path), f"{path}.tags"),
        intent_signature=_string_list(_get(obj, "intent_signature", path), f"{path}.intent_signature"),
        control_flow_features=_control_flow(_get(obj, "control_flow_features", path), f"{path}.control_flow_features"),
        entry_scene_id=_string(_get(obj, "entry_scene_id", path), f"{path}.entry_scene_id", nonempty=True),
        subscenes=_string_list(_get(obj, "subscenes", path), f"{path}.subscenes", nonempty=True, items_nonempty=True),
    )


_SCENE_FIELDS = (
    "scene_id",
    "scene_name",
    "scene_type",
    "scene_goal",
    "input",
    "output",
    "entry_conditions",
    "exit_conditions",
    "entry_logic_step_id",
    "contained_logic_steps",
    "next_scene_rules",
)


def _parse_scene(value: Any, path: str) -> Scene:
    obj = _require_object(value, path)
    _reject_extras(obj, _SCENE_FIELDS, path)
    return Scene(
        scene_id=_string(_get(obj, "scene_id", path), f"{path}.scene_id", nonempty=True),
        scene_name=_string(_get(obj, "scene_name", path), f"{path}.scene_name"),
        scene_type=_enum(SceneType, _get(obj, "scene_type", path), f"{path}.scene_type"),
        scene_goal=_string(_get(obj, "scene_goal", path), f"{path}.scene_goal"),
        input=_string_list(_get(obj, "input", path), f"{path}.input"),
        output=_string_list(_get(obj, "output", path), f"{path}.output"),
        entry_conditions=_string_list(_get(obj, "entry_conditions", path), f"{path}.entry_conditions"),
        exit_conditions=_string_list(_get(obj, "exit_conditions", path), f"{path}.exit_conditions"),
        entry_logic_step_id=_string(_get(obj, "entry_logic_step_id", path), f"{path}.entry_logic_step_id", nonempty=True),
        contained_logic_steps=_string_list(_get(obj, "contained_logic_steps", path), f"{path}.contained_logic_steps", nonempty=True, items_nonempty=True),
        next_scene_rules=_transition_rules(_get(obj, "next_scene_rules", path), f"{path}.next_scene_rules"),
    )


_STEP_FIELDS = (
    "logic_step_id",
    "act_type",
    "input_args",
    "output_binding",
    "actor",
    "object",
    "instrument",
    "preconditions",
    "effects",
    "resource_scope",
    "resource_target",
    "next_step_rules",
)


def _parse_step(value: Any, path: str) -> LogicStep:
    obj = _require_object(value, path)
    _reject_extras(obj, _STEP_FIELDS, path)
    return LogicStep(
        logic_step_id=_string(_get(obj, "logic_step_id", path), f"{path}.logic_step_id", nonempty=True),
        act_type=_enum(ActType, _get(obj, "act_type", path), f"{path}.act_type"),
        input_args=_string_list(_get(obj, "input_args", path), f"{path}.input_args"),
        output_binding=_opt_string(obj.get("output_binding"), f"{path}.output_binding"),
        actor=_string(_get(obj, "actor", path), f"{path}.actor"),
        object=_string(_get(obj, "object", path), f"{path}.object"),
        instrument=_opt_string(obj.get("instrument"), f"{path}.instrument"),
        preconditions=_string_list(_get(obj, "preconditions", path), f"{path}.preconditions"),
        effects=_string_list(_get(obj, "effects", path), f"{path}.effects"),
        resource_scope=_enum(ResourceScope, _get(obj, "resource_scope", path), f"{path}.resource_scope"),
        resource_target=_string(_get(obj, "resource_target", path), f"{path}.resource_target"),
        next_step_rules=_transition_rules(_get(obj, "next_step_rules", path), f"{path}.next_step_rules"),
    )


def document_from_dict(obj: Any) -> SslDocument:
    """Build a typed document from an already-decoded JSON value."""
    root = _require_object(obj, "$")
    _reject_extras(root, ("skill", "scenes", "logic_steps"), "")
    skill = _parse_skill(_get(root, "skill", ""), "skill")
    scenes = [
        _parse_scene(v, f"scenes[{i}]")
        for i, v in enumerate(_list(_get(root, "scenes", ""), "scenes"))
    ]
    steps = [
        _parse_step(v, f"logic_steps[{i}]")
        for i, v in enumerate(_list(_get(root, "logic_steps", ""), "logic_steps"))
    ]
    return SslDocument(skill=skill, scenes=scenes, logic_steps=steps)


def parse_document(text: str | bytes) -> SslDocument:
    """Parse a serialized record into a typed document.

    Raises a ParseError subclass naming the first violation. Graph-level
    checks (uniqueness, containment, targets) are not performed here.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedSyntax(f"invalid UTF-8: {exc}") from None
    if not text.strip():
        raise MalformedSyntax("document is empty")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedSyntax(str(exc)) from None
    return document_from_dict(obj)


# --- serialization -------------------------------------------------------


def document_to_dict(doc: SslDocument) -> dict:
    """Plain-JSON form of a document, fields in canonical order."""
    skill = doc.skill
    return {
        "skill": {
            "skill_id": skill.skill_id,
            "skill_name": skill.skill_name,
            "skill_goal": skill.skill_goal,
            "top_pattern": skill.top_pattern,
            "expected_inputs": [{"name": f.name, "type": f.type} for f in skill.expected_inputs],
            "expected_outputs": [{"name": f.name, "type": f.type} for f in skill.expected_outputs],
            "dependencies": [{"type": d.type, "value": d.value} for d in skill.dependencies],
            "tags": list(skill.tags),
            "intent_signature": list(skill.intent_signature),
            "control_flow_features": {
                "has_branch": skill.control_flow_features.has_branch,
                "has_loop": skill.control_flow_features.has_loop,
                "has_tool_call": skill.control_flow_features.has_tool_call,
                "touches_sensitive_resources": skill.control_flow_features.touches_sensitive_resources,
            },
            "entry_scene_id": skill.entry_scene_id,
            "subscenes": list(skill.subscenes),
        },
        "scenes": [
            {
                "scene_id": s.scene_id,
                "scene_name": s.scene_name,
                "scene_type": s.scene_type.value,
                "scene_goal": s.scene_goal,
                "input": list(s.input),
                "output": list(s.output),
                "entry_conditions": list(s.entry_conditions),
                "exit_conditions": list(s.exit_conditions),
                "entry_logic_step_id": s.entry_logic_step_id,
                "contained_logic_steps": list(s.contained_logic_steps),
                "next_scene_rules": [
                    {"condition": r.condition, "target": r.target} for r in s.next_scene_rules
                ],
            }
            for s in doc.scenes
        ],
        "logic_steps": [
            {
                "logic_step_id": t.logic_step_id,
                "act_type": t.act_type.value,
                "input_args": list(t.input_args),
                "output_binding": t.output_binding,
                "actor": t.actor,
                "object": t.object,
                "instrument": t.instrument,
                "preconditions": list(t.preconditions),
                "effects": list(t.effects),
                "resource_scope": t.resource_scope.value,
                "resource_target": t.resource_target,
                "next_step_rules": [
                    {"condition": r.condition, "target": r.target} for r in t.next_step_rules
                ],
            }
            for t in doc.logic_steps
        ],
    }


def serialize_document(doc: SslDocument) -> str:
    """Canonical text form: fixed field order, stable whitespace.

    The output re-parses to an equal document, and serializing the same
    document twice yields byte-identical text. Optional fields are
    written as explicit ``null``.
    """
    return json.dumps(document_to_dict(doc), indent=2, ensure_ascii=False) + "\n"
