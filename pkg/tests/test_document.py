from __future__ import annotations

import json
import random

import pytest

from sslkit import (
    ActType,
    ResourceScope,
    SceneRef,
    SceneType,
    StepRef,
    TerminalRef,
    TerminalTarget,
    document_from_dict,
    is_variable,
    parse_document,
    resolve_target,
    serialize_document,
)
from sslkit.errors import (
    DanglingTarget,
    MalformedSyntax,
    MissingField,
    UnexpectedField,
    UnknownEnumValue,
    WrongKind,
    WrongLayerTerminal,
)


class TestParse:
    def test_golden_record_shape(self, fixture_doc):
        assert fixture_doc.skill.skill_id == "SKILL_WRITING_REFINER"
        assert len(fixture_doc.scenes) == 3
        assert len(fixture_doc.logic_steps) == 7
        assert fixture_doc.scenes[0].scene_type is SceneType.PREPARE
        assert fixture_doc.logic_steps[0].act_type is ActType.VALIDATE
        assert fixture_doc.logic_steps[3].resource_scope is ResourceScope.LOCAL_FS
        assert fixture_doc.logic_steps[0].instrument is None
        assert fixture_doc.logic_steps[3].instrument == "filesystem.read"

    def test_accepts_bytes(self, fixture_text, fixture_doc):
        assert parse_document(fixture_text.encode("utf-8")) == fixture_doc

    def test_empty_text(self):
        with pytest.raises(MalformedSyntax):
            parse_document("")
        with pytest.raises(MalformedSyntax):
            parse_document(b"   \n ")

    def test_non_json(self):
        with pytest.raises(MalformedSyntax):
            parse_document("not json {")

    def test_non_object_root(self):
        with pytest.raises(WrongKind):
            parse_document("[1, 2]")

    def test_unknown_scene_type(self, mutable_obj):
        mutable_obj["scenes"][0]["scene_type"] = "COOK"
        with pytest.raises(UnknownEnumValue) as excinfo:
            document_from_dict(mutable_obj)
        assert excinfo.value.path == "scenes[0].scene_type"
        assert excinfo.value.token == "COOK"

    def test_unknown_act_type(self, mutable_obj):
        mutable_obj["logic_steps"][2]["act_type"] = "JUGGLE"
        with pytest.raises(UnknownEnumValue) as excinfo:
            document_from_dict(mutable_obj)
        assert excinfo.value.path == "logic_steps[2].act_type"

    def test_missing_field(self, mutable_obj):
        del mutable_obj["skill"]["skill_goal"]
        with pytest.raises(MissingField) as excinfo:
            document_from_dict(mutable_obj)
        assert excinfo.value.path == "skill.skill_goal"

    def test_missing_top_level_collection(self, mutable_obj):
        del mutable_obj["logic_steps"]
        with pytest.raises(MissingField) as excinfo:
            document_from_dict(mutable_obj)
        assert excinfo.value.path == "logic_steps"

    def test_extra_field_rejected(self, mutable_obj):
        mutable_obj["skill"]["surprise"] = 1
        with pytest.raises(UnexpectedField) as excinfo:
            document_from_dict(mutable_obj)
        assert excinfo.value.path == "skill.surprise"

    def test_extra_top_level_key_rejected(self, mutable_obj):
        mutable_obj["notes"] = "hello"
        with pytest.raises(UnexpectedField):
            document_from_dict(mutable_obj)

    def test_wrong_kind(self, mutable_obj):
        mutable_obj["skill"]["tags"] = "writing"
        with pytest.raises(WrongKind) as excinfo:
            document_from_dict(mutable_obj)
        assert excinfo.value.path == "skill.tags"

    def test_boolean_kind_enforced(self, mutable_obj):
        mutable_obj["skill"]["control_flow_features"]["has_loop"] = 0
        with pytest.raises(WrongKind):
            document_from_dict(mutable_obj)

    def test_empty_subscenes_rejected(self, mutable_obj):
        mutable_obj["skill"]["subscenes"] = []
        with pytest.raises(WrongKind):
            document_from_dict(mutable_obj)

    def test_empty_transition_rules_rejected(self, mutable_obj):
        mutable_obj["scenes"][0]["next_scene_rules"] = []
        with pytest.raises(WrongKind):
            document_from_dict(mutable_obj)

    def test_empty_rule_condition_rejected(self, mutable_obj):
        mutable_obj["logic_steps"][0]["next_step_rules"][0]["condition"] = ""
        with pytest.raises(WrongKind):
            document_from_dict(mutable_obj)

    def test_optional_fields_may_be_absent(self, mutable_obj):
        del mutable_obj["logic_steps"][0]["output_binding"]
        del mutable_obj["logic_steps"][0]["instrument"]
        doc = document_from_dict(mutable_obj)
        assert doc.logic_steps[0].output_binding is None
        assert doc.logic_steps[0].instrument is None


class TestSerialize:
    def test_round_trip(self, fixture_doc):
        assert parse_document(serialize_document(fixture_doc)) == fixture_doc

    def test_deterministic(self, fixture_doc):
        assert serialize_document(fixture_doc) == serialize_document(fixture_doc)

    def test_byte_identical_after_reparse(self, fixture_doc):
        text = serialize_document(fixture_doc)
        assert serialize_document(parse_document(text)) == text

    def test_null_optionals_explicit(self, fixture_doc):
        text = serialize_document(fixture_doc)
        assert '"instrument": null' in text

    def test_field_order_stable(self, fixture_doc):
        obj = json.loads(serialize_document(fixture_doc))
        assert list(obj) == ["skill", "scenes", "logic_steps"]
        assert list(obj["skill"])[0] == "skill_id"
        assert list(obj["scenes"][0])[0] == "scene_id"
        assert list(obj["logic_steps"][0])[:2] == ["logic_step_id", "act_type"]


class TestResolveTarget:
    def test_scene_reference(self, fixture_doc):
        assert resolve_target(fixture_doc, "S_ACQUIRE") == SceneRef("S_ACQUIRE")

    def test_scene_terminal(self, fixture_doc):
        resolved = resolve_target(fixture_doc, "END_SUCCESS")
        assert resolved == TerminalRef(TerminalTarget.END_SUCCESS)

    def test_step_in_other_scene_dangles(self, fixture_doc):
        # the step exists but belongs to S_ACQUIRE
        with pytest.raises(DanglingTarget):
            resolve_target(fixture_doc, "L_READ_GUIDE", scene_id="S_PREPARE")

    def test_step_in_own_scene(self, fixture_doc):
        resolved = resolve_target(fixture_doc, "L_READ_GUIDE", scene_id="S_ACQUIRE")
        assert resolved == StepRef("L_READ_GUIDE")

    def test_logic_terminal(self, fixture_doc):
        resolved = resolve_target(fixture_doc, "YIELD_FAIL", scene_id="S_PREPARE")
        assert resolved == TerminalRef(TerminalTarget.YIELD_FAIL)

    def test_yield_in_scene_scope_is_wrong_layer(self, fixture_doc):
        with pytest.raises(WrongLayerTerminal):
            resolve_target(fixture_doc, "YIELD_FAIL")

    def test_end_in_logic_scope_is_wrong_layer(self, fixture_doc):
        with pytest.raises(WrongLayerTerminal):
            resolve_target(fixture_doc, "END_SUCCESS", scene_id="S_PREPARE")

    def test_unknown_scene_target(self, fixture_doc):
        with pytest.raises(DanglingTarget):
            resolve_target(fixture_doc, "S_MISSING")

    def test_terminal_layering_never_crosses(self, fixture_doc):
        # Scene scope never yields YIELD_*, logic scope never END_*.
        for token in ("END_SUCCESS", "END_FAIL"):
            assert resolve_target(fixture_doc, token).kind.value.startswith("END")
        for token in ("YIELD_SUCCESS", "YIELD_FAIL"):
            resolved = resolve_target(fixture_doc, token, scene_id="S_REVISE")
            assert resolved.kind.value.startswith("YIELD")


class TestIsVariable:
    def test_prefixed(self):
        assert is_variable("$draft_text")

    def test_literal(self):
        assert not is_variable("skill_dispatched")

    def test_empty(self):
        assert not is_variable("")


def test_enum_totality_under_fuzzing(mutable_obj):
    # Random tokens outside the closed sets must never survive parsing.
    rng = random.Random(20240)
    scene_values = {v.value for v in SceneType}
    act_values = {v.value for v in ActType}
    scope_values = {v.value for v in ResourceScope}
    alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ_"
    for _ in range(200):
        token = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 12)))
        field, pool = rng.choice(
            [("scene_type", scene_values), ("act_type", act_values), ("resource_scope", scope_values)]
        )
        if token in pool:
            continue
        obj = json.loads(json.dumps(mutable_obj))
        if field == "scene_type":
            obj["scenes"][rng.randrange(3)][field] = token
        else:
            obj["logic_steps"][rng.randrange(7)][field] = token
        with pytest.raises(UnknownEnumValue):
            document_from_dict(obj)


def test_accepted_documents_only_hold_closed_set_values(fixture_doc):
    for scene in fixture_doc.scenes:
        assert scene.scene_type in SceneType
    for step in fixture_doc.logic_steps:
        assert step.act_type in ActType
        assert step.resource_scope in ResourceScope
