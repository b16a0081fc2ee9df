"""Hard structural validation and soft semantic checks.

Hard issues reject a document (duplicate identifiers, broken containment
or entry pointers, unresolvable or wrong-layer transition targets). Soft
issues are quality signals only and never block acceptance: unbacked
scene outputs, unbound step inputs, scene counts outside the 2-5
guidance, and unreachable nodes.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum

from . import document as dm
from .document import SslDocument
from .errors import DanglingTarget, WrongLayerTerminal

SCENE_COUNT_GUIDANCE = (2, 5)  # inclusive band for macro-level scenes


class Severity(str, Enum):
    HARD = "hard"
    SOFT = "soft"


class IssueCode(str, Enum):
    # hard
    DUPLICATE_IDENTIFIER = "DuplicateIdentifier"
    ENTRY_SCENE_NOT_IN_SUBSCENES = "EntrySceneNotInSubscenes"
    UNKNOWN_SUBSCENE = "UnknownSubscene"
    SCENE_NOT_IN_SUBSCENES = "SceneNotInSubscenes"
    ENTRY_STEP_NOT_CONTAINED = "EntryStepNotContained"
    UNKNOWN_CONTAINED_STEP = "UnknownContainedStep"
    ORPHAN_LOGIC_STEP = "OrphanLogicStep"
    MULTIPLY_CONTAINED_STEP = "MultiplyContainedStep"
    DANGLING_TARGET = "DanglingTarget"
    WRONG_LAYER_TERMINAL = "WrongLayerTerminal"
    # soft
    UNBACKED_SCENE_OUTPUT = "UnbackedSceneOutput"
    UNBOUND_INPUT_REFERENCE = "UnboundInputReference"
    SCENE_COUNT_OUTSIDE_GUIDANCE = "SceneCountOutsideGuidance"
    UNREACHABLE_SCENE = "UnreachableScene"
    UNREACHABLE_STEP = "UnreachableStep"
    # parse / orchestration codes, used when failures are reported as issues
    MALFORMED_SYNTAX = "MalformedSyntax"
    MISSING_FIELD = "MissingField"
    UNKNOWN_ENUM_VALUE = "UnknownEnumValue"
    WRONG_KIND = "WrongKind"
    UNEXPECTED_FIELD = "UnexpectedField"
    NON_CONFORMING_OUTPUT = "NonConformingOutput"
    BACKEND_UNAVAILABLE = "BackendUnavailable"


@dataclass(frozen=True)
class ValidationIssue:
    severity: Severity
    code: IssueCode
    location: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    issues: list[ValidationIssue]
    accepted: bool

    @classmethod
    def from_issues(cls, issues: list[ValidationIssue]) -> "ValidationReport":
        accepted = not any(i.severity is Severity.HARD for i in issues)
        return cls(issues=issues, accepted=accepted)

    def hard_issues(self) -> list[ValidationIssue]:
        return [i for i in self.issues if i.severity is Severity.HARD]

    def soft_issues(self) -> list[ValidationIssue]:
        return [i for i in self.issues if i.severity is Severity.SOFT]

    def codes(self) -> set[IssueCode]:
        return {i.code for i in self.issues}


def _hard(code: IssueCode, location: str, message: str) -> ValidationIssue:
    return ValidationIssue(Severity.HARD, code, location, message)


def _soft(code: IssueCode, location: str, message: str) -> ValidationIssue:
    return ValidationIssue(Severity.SOFT, code, location, message)


def _containment(doc: SslDocument) -> dict[str, list[str]]:
    """step id -> scene ids whose contained_logic_steps list it."""
    owners: dict[str, list[str]] = {}
    for scene in doc.scenes:
        for sid in scene.contained_logic_steps:
            owners.setdefault(sid, []).append(scene.scene_id)
    return owners


def validate_hard(doc: SslDocument) -> ValidationReport:
    """Run the rejection-grade structural checks over a parsed document."""
    issues: list[ValidationIssue] = []
    skill = doc.skill

    all_ids = (
        [skill.skill_id]
        + [s.scene_id for s in doc.scenes]
        + [t.logic_step_id for t in doc.logic_steps]
    )
    for ident, count in sorted(Counter(all_ids).items()):
        if count > 1:
            issues.append(
                _hard(
                    IssueCode.DUPLICATE_IDENTIFIER,
                    "$",
                    f"identifier {ident!r} appears {count} times",
                )
            )

    scene_ids = {s.scene_id for s in doc.scenes}
    step_ids = {t.logic_step_id for t in doc.logic_steps}

    if skill.entry_scene_id not in skill.subscenes:
        issues.append(
            _hard(
                IssueCode.ENTRY_SCENE_NOT_IN_SUBSCENES,
                "skill.entry_scene_id",
                f"entry scene {skill.entry_scene_id!r} is not listed in subscenes",
            )
        )
    for i, sid in enumerate(skill.subscenes):
        if sid not in scene_ids:
            issues.append(
                _hard(
                    IssueCode.UNKNOWN_SUBSCENE,
                    f"skill.subscenes[{i}]",
                    f"subscene {sid!r} has no scene record",
                )
            )
    for i, scene in enumerate(doc.scenes):
        if scene.scene_id not in skill.subscenes:
            issues.append(
                _hard(
                    IssueCode.SCENE_NOT_IN_SUBSCENES,
                    f"scenes[{i}].scene_id",
                    f"scene {scene.scene_id!r} is not listed in skill.subscenes",
                )
            )

    for i, scene in enumerate(doc.scenes):
        if scene.entry_logic_step_id not in scene.contained_logic_steps:
            issues.append(
                _hard(
                    IssueCode.ENTRY_STEP_NOT_CONTAINED,
                    f"scenes[{i}].entry_logic_step_id",
                    f"entry step {scene.entry_logic_step_id!r} is not contained by scene {scene.scene_id!r}",
                )
            )
        for j, sid in enumerate(scene.contained_logic_steps):
            if sid not in step_ids:
                issues.append(
                    _hard(
                        IssueCode.UNKNOWN_CONTAINED_STEP,
                        f"scenes[{i}].contained_logic_steps[{j}]",
                        f"contained step {sid!r} has no logic-step record",
                    )
                )

    owners = _containment(doc)
    for i, step in enumerate(doc.logic_steps):
        containing = owners.get(step.logic_step_id, [])
        if not containing:
            issues.append(
                _hard(
                    IssueCode.ORPHAN_LOGIC_STEP,
                    f"logic_steps[{i}].logic_step_id",
                    f"step {step.logic_step_id!r} is contained by no scene",
                )
            )
        elif len(containing) > 1:
            issues.append(
                _hard(
                    IssueCode.MULTIPLY_CONTAINED_STEP,
                    f"logic_steps[{i}].logic_step_id",
                    f"step {step.logic_step_id!r} is contained by scenes {containing}",
                )
            )

    for i, scene in enumerate(doc.scenes):
        for j, rule in enumerate(scene.next_scene_rules):
            loc = f"scenes[{i}].next_scene_rules[{j}].target"
            try:
                dm.resolve_target(doc, rule.target)
            except WrongLayerTerminal as exc:
                issues.append(_hard(IssueCode.WRONG_LAYER_TERMINAL, loc, str(exc)))
            except DanglingTarget as exc:
                issues.append(_hard(IssueCode.DANGLING_TARGET, loc, str(exc)))

    step_index = {t.logic_step_id: k for k, t in enumerate(doc.logic_steps)}
    for scene in doc.scenes:
        for sid in scene.contained_logic_steps:
            k = step_index.get(sid)
            if k is None:
                continue  # already reported as UnknownContainedStep
            if len(owners.get(sid, [])) != 1:
                continue  # scope ambiguous; the containment issue already fired
            for j, rule in enumerate(doc.logic_steps[k].next_step_rules):
                loc = f"logic_steps[{k}].next_step_rules[{j}].target"
                try:
                    dm.resolve_target(doc, rule.target, scene_id=scene.scene_id)
                except WrongLayerTerminal as exc:
                    issues.append(_hard(IssueCode.WRONG_LAYER_TERMINAL, loc, str(exc)))
                except DanglingTarget as exc:
                    issues.append(_hard(IssueCode.DANGLING_TARGET, loc, str(exc)))

    return ValidationReport.from_issues(issues)


def _produces(step: dm.LogicStep, token: str) -> bool:
    # A step produces a variable if it is the output binding or appears
    # verbatim in an effects string ("$x generated"). The lookahead stops
    # "$x" from matching inside "$xy".
    if step.output_binding == token:
        return True
    for effect in step.effects:
        idx = effect.find(token)
        while idx != -1:
            end = idx + len(token)
            if end == len(effect) or not (effect[end].isalnum() or effect[end] == "_"):
                return True
            idx = effect.find(token, idx + 1)
    return False


def validate_soft(doc: SslDocument) -> ValidationReport:
    """Run the advisory data-flow and shape checks.

    Intended for documents that already passed the hard gate; tolerates
    broken references by skipping what it cannot resolve.
    """
    issues: list[ValidationIssue] = []
    skill = doc.skill
    steps = doc.step_by_id()

    n_scenes = len(doc.scenes)
    lo, hi = SCENE_COUNT_GUIDANCE
    if not lo <= n_scenes <= hi:
        issues.append(
            _soft(
                IssueCode.SCENE_COUNT_OUTSIDE_GUIDANCE,
                "scenes",
                f"{n_scenes} scenes, outside the {lo}-{hi} guidance band",
            )
        )

    for i, scene in enumerate(doc.scenes):
        contained = [steps[sid] for sid in scene.contained_logic_steps if sid in steps]
        for j, out in enumerate(scene.output):
            if not dm.is_variable(out):
                continue
            if not any(_produces(step, out) for step in contained):
                issues.append(
                    _soft(
                        IssueCode.UNBACKED_SCENE_OUTPUT,
                        f"scenes[{i}].output[{j}]",
                        f"output {out!r} is not produced by any contained step",
                    )
                )

    bound = {t.output_binding for t in doc.logic_steps if t.output_binding}
    declared_inputs = {f.name for f in skill.expected_inputs}
    step_index = {t.logic_step_id: k for k, t in enumerate(doc.logic_steps)}
    for scene in doc.scenes:
        for sid in scene.contained_logic_steps:
            k = step_index.get(sid)
            if k is None:
                continue
            step = doc.logic_steps[k]
            for j, arg in enumerate(step.input_args):
                if not dm.is_variable(arg):
                    continue
                if arg in bound or arg[1:] in declared_inputs or arg in scene.input:
                    continue
                issues.append(
                    _soft(
                        IssueCode.UNBOUND_INPUT_REFERENCE,
                        f"logic_steps[{k}].input_args[{j}]",
                        f"input {arg!r} is never bound by a step and not declared as a skill or scene input",
                    )
                )

    scenes = doc.scene_by_id()
    if skill.entry_scene_id in scenes:
        seen = set()
        frontier = [skill.entry_scene_id]
        while frontier:
            current = frontier.pop()
            if current in seen or current not in scenes:
                continue
            seen.add(current)
            for rule in scenes[current].next_scene_rules:
                frontier.append(rule.target)
        for i, scene in enumerate(doc.scenes):
            if scene.scene_id not in seen:
                issues.append(
                    _soft(
                        IssueCode.UNREACHABLE_SCENE,
                        f"scenes[{i}]",
                        f"scene {scene.scene_id!r} is unreachable from the entry scene",
                    )
                )

    for i, scene in enumerate(doc.scenes):
        local = set(scene.contained_logic_steps)
        if scene.entry_logic_step_id not in local:
            continue
        seen = set()
        frontier = [scene.entry_logic_step_id]
        while frontier:
            current = frontier.pop()
            if current in seen or current not in local or current not in steps:
                continue
            seen.add(current)
            for rule in steps[current].next_step_rules:
                frontier.append(rule.target)
        for sid in scene.contained_logic_steps:
            if sid in steps and sid not in seen:
                k = step_index[sid]
                issues.append(
                    _soft(
                        IssueCode.UNREACHABLE_STEP,
                        f"logic_steps[{k}]",
                        f"step {sid!r} is unreachable from the entry step of scene {scene.scene_id!r}",
                    )
                )

    return ValidationReport.from_issues(issues)


def validate(doc: SslDocument) -> ValidationReport:
    """Hard gate first; soft checks only run when the gate passes."""
    hard = validate_hard(doc)
    if not hard.accepted:
        return hard
    soft = validate_soft(doc)
    return ValidationReport(issues=hard.issues + soft.issues, accepted=True)
