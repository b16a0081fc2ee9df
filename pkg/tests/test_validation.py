from __future__ import annotations

import pytest

from sslkit import (
    IssueCode,
    Severity,
    document_from_dict,
    resolve_target,
    validate,
    validate_hard,
    validate_soft,
)
from sslkit.errors import DanglingTarget, WrongLayerTerminal


def hard_codes(report):
    return [i.code for i in report.issues if i.severity is Severity.HARD]


def soft_codes(report):
    return [i.code for i in report.issues if i.severity is Severity.SOFT]


class TestHard:
    def test_golden_record_accepted(self, fixture_doc):
        report = validate_hard(fixture_doc)
        assert report.accepted
        assert report.issues == []

    def test_dangling_scene_target(self, mutable_obj):
        mutable_obj["scenes"][0]["next_scene_rules"][0]["target"] = "S_MISSING"
        report = validate_hard(document_from_dict(mutable_obj))
        assert hard_codes(report) == [IssueCode.DANGLING_TARGET]
        assert not report.accepted

    def test_duplicate_step_identifier(self, mutable_obj):
        # duplicate L_PARSE_CONTEXT onto another step
        mutable_obj["logic_steps"][3]["logic_step_id"] = "L_PARSE_CONTEXT"
        report = validate_hard(document_from_dict(mutable_obj))
        assert IssueCode.DUPLICATE_IDENTIFIER in hard_codes(report)
        assert not report.accepted

    def test_duplicate_of_skill_id_counts(self, mutable_obj):
        mutable_obj["scenes"][0]["scene_id"] = "SKILL_WRITING_REFINER"
        report = validate_hard(document_from_dict(mutable_obj))
        assert IssueCode.DUPLICATE_IDENTIFIER in hard_codes(report)

    def test_entry_scene_outside_subscenes(self, mutable_obj):
        mutable_obj["skill"]["entry_scene_id"] = "S_NOPE"
        report = validate_hard(document_from_dict(mutable_obj))
        assert hard_codes(report) == [IssueCode.ENTRY_SCENE_NOT_IN_SUBSCENES]

    def test_entry_step_outside_containment(self, mutable_obj):
        mutable_obj["scenes"][0]["entry_logic_step_id"] = "L_READ_GUIDE"
        report = validate_hard(document_from_dict(mutable_obj))
        assert hard_codes(report) == [IssueCode.ENTRY_STEP_NOT_CONTAINED]

    def test_wrong_layer_terminal_in_scene_rules(self, mutable_obj):
        mutable_obj["scenes"][0]["next_scene_rules"][1]["target"] = "YIELD_FAIL"
        report = validate_hard(document_from_dict(mutable_obj))
        assert hard_codes(report) == [IssueCode.WRONG_LAYER_TERMINAL]

    def test_wrong_layer_terminal_in_step_rules(self, mutable_obj):
        mutable_obj["logic_steps"][1]["next_step_rules"][0]["target"] = "END_SUCCESS"
        report = validate_hard(document_from_dict(mutable_obj))
        assert hard_codes(report) == [IssueCode.WRONG_LAYER_TERMINAL]

    def test_orphan_step(self, mutable_obj):
        extra = dict(mutable_obj["logic_steps"][1])
        extra["logic_step_id"] = "L_FLOATING"
        mutable_obj["logic_steps"].append(extra)
        report = validate_hard(document_from_dict(mutable_obj))
        assert hard_codes(report) == [IssueCode.ORPHAN_LOGIC_STEP]

    def test_multiply_contained_step(self, mutable_obj):
        mutable_obj["scenes"][1]["contained_logic_steps"].append("L_VALIDATE_INPUT")
        report = validate_hard(document_from_dict(mutable_obj))
        assert hard_codes(report) == [IssueCode.MULTIPLY_CONTAINED_STEP]

    def test_unknown_subscene(self, mutable_obj):
        mutable_obj["skill"]["subscenes"].append("S_GHOST")
        report = validate_hard(document_from_dict(mutable_obj))
        assert hard_codes(report) == [IssueCode.UNKNOWN_SUBSCENE]

    def test_unlisted_scene(self, mutable_obj):
        extra = dict(mutable_obj["scenes"][2])
        extra["scene_id"] = "S_EXTRA"
        mutable_obj["scenes"].append(extra)
        report = validate_hard(document_from_dict(mutable_obj))
        codes = hard_codes(report)
        assert IssueCode.SCENE_NOT_IN_SUBSCENES in codes
        # its contained steps are now claimed by two scenes
        assert IssueCode.MULTIPLY_CONTAINED_STEP in codes

    def test_unknown_contained_step(self, mutable_obj):
        mutable_obj["scenes"][0]["contained_logic_steps"].append("L_GHOST")
        report = validate_hard(document_from_dict(mutable_obj))
        assert hard_codes(report) == [IssueCode.UNKNOWN_CONTAINED_STEP]

    def test_cross_scene_step_target_dangles(self, mutable_obj):
        mutable_obj["logic_steps"][0]["next_step_rules"][0]["target"] = "L_READ_GUIDE"
        report = validate_hard(document_from_dict(mutable_obj))
        assert hard_codes(report) == [IssueCode.DANGLING_TARGET]

    def test_soundness_accepted_implies_resolvable(self, fixture_doc):
        # Exhaustive resolution over every rule of an accepted document
        # must raise nothing.
        assert validate_hard(fixture_doc).accepted
        for scene in fixture_doc.scenes:
            for rule in scene.next_scene_rules:
                resolve_target(fixture_doc, rule.target)
            for sid in scene.contained_logic_steps:
                step = fixture_doc.step_by_id()[sid]
                for rule in step.next_step_rules:
                    resolve_target(fixture_doc, rule.target, scene_id=scene.scene_id)


class TestSoft:
    def test_golden_record_backing(self, fixture_doc):
        report = validate_soft(fixture_doc)
        # The only data-flow loose end in the golden record is
        # $parsed_intent: S_PREPARE declares it as an output but no
        # contained step binds it. Everything else is backed, including
        # $applied_principles via effects prose.
        unbacked = [
            i for i in report.issues if i.code is IssueCode.UNBACKED_SCENE_OUTPUT
        ]
        assert [i.location for i in unbacked] == ["scenes[0].output[0]"]
        assert all("$parsed_intent" in i.message for i in unbacked)
        assert soft_codes(report) == [IssueCode.UNBACKED_SCENE_OUTPUT]

    def test_effects_prose_counts_as_production(self, fixture_doc):
        report = validate_soft(fixture_doc)
        locations = [i.location for i in report.issues]
        # $applied_principles appears only in effects text yet is backed
        assert "scenes[2].output[1]" not in locations

    def test_added_unbound_output_flagged(self, mutable_obj):
        mutable_obj["scenes"][2]["output"].append("$unbound_var")
        report = validate_soft(document_from_dict(mutable_obj))
        flagged = [
            i for i in report.issues if i.code is IssueCode.UNBACKED_SCENE_OUTPUT
        ]
        assert any("$unbound_var" in i.message for i in flagged)

    def test_prefix_match_does_not_back_longer_variable(self, mutable_obj):
        # effects mention $applied_principles; $applied_principles_extra
        # must still be unbacked
        mutable_obj["scenes"][2]["output"].append("$applied_principles_extra")
        report = validate_soft(document_from_dict(mutable_obj))
        assert any(
            "$applied_principles_extra" in i.message
            for i in report.issues
            if i.code is IssueCode.UNBACKED_SCENE_OUTPUT
        )

    def test_unbound_step_input(self, mutable_obj):
        mutable_obj["logic_steps"][6]["input_args"].append("$mystery")
        report = validate_soft(document_from_dict(mutable_obj))
        assert IssueCode.UNBOUND_INPUT_REFERENCE in soft_codes(report)

    def test_inputs_declared_on_skill_are_bound(self, fixture_doc):
        report = validate_soft(fixture_doc)
        assert IssueCode.UNBOUND_INPUT_REFERENCE not in soft_codes(report)

    def test_scene_count_guidance(self, mutable_obj):
        # shrink to a single scene, self-contained
        scene = mutable_obj["scenes"][0]
        scene["next_scene_rules"] = [{"condition": "always", "target": "END_SUCCESS"}]
        scene["output"] = []
        mutable_obj["scenes"] = [scene]
        mutable_obj["skill"]["subscenes"] = ["S_PREPARE"]
        mutable_obj["logic_steps"] = mutable_obj["logic_steps"][:2]
        doc = document_from_dict(mutable_obj)
        assert validate_hard(doc).accepted
        report = validate_soft(doc)
        assert IssueCode.SCENE_COUNT_OUTSIDE_GUIDANCE in soft_codes(report)

    def test_six_scenes_outside_guidance(self, mutable_obj):
        # six scenes by cloning; containment kept unique via fresh steps
        for n in range(3):
            scene = dict(mutable_obj["scenes"][1])
            step = dict(mutable_obj["logic_steps"][2])
            scene["scene_id"] = f"S_CLONE_{n}"
            step["logic_step_id"] = f"L_CLONE_{n}"
            step["next_step_rules"] = [{"condition": "always", "target": "YIELD_SUCCESS"}]
            scene["entry_logic_step_id"] = step["logic_step_id"]
            scene["contained_logic_steps"] = [step["logic_step_id"]]
            scene["output"] = []
            scene["next_scene_rules"] = [{"condition": "always", "target": "END_SUCCESS"}]
            mutable_obj["scenes"].append(scene)
            mutable_obj["logic_steps"].append(step)
            mutable_obj["skill"]["subscenes"].append(scene["scene_id"])
        doc = document_from_dict(mutable_obj)
        assert validate_hard(doc).accepted
        report = validate_soft(doc)
        assert IssueCode.SCENE_COUNT_OUTSIDE_GUIDANCE in soft_codes(report)
        # clones are not wired from the entry scene
        assert IssueCode.UNREACHABLE_SCENE in soft_codes(report)

    def test_unreachable_step(self, mutable_obj):
        # S_REVISE entry goes straight to the last step, stranding two
        mutable_obj["scenes"][2]["entry_logic_step_id"] = "L_APPLY_EDITING"
        report = validate_soft(document_from_dict(mutable_obj))
        stranded = [i for i in report.issues if i.code is IssueCode.UNREACHABLE_STEP]
        assert len(stranded) == 2


class TestValidate:
    def test_golden_record(self, fixture_doc):
        report = validate(fixture_doc)
        assert report.accepted
        assert report.hard_issues() == []

    def test_hard_failure_skips_soft(self, mutable_obj):
        mutable_obj["scenes"][0]["next_scene_rules"][0]["target"] = "S_MISSING"
        mutable_obj["scenes"][2]["output"].append("$unbound_var")
        report = validate(document_from_dict(mutable_obj))
        assert not report.accepted
        assert report.soft_issues() == []

    def test_soft_issues_never_block(self, mutable_obj):
        mutable_obj["scenes"][2]["output"].append("$unbound_var")
        report = validate(document_from_dict(mutable_obj))
        assert report.accepted
        assert report.soft_issues()

    def test_removing_soft_cause_keeps_acceptance(self, mutable_obj):
        # monotonicity: dropping the unbacked output adds no hard issue
        assert validate(document_from_dict(mutable_obj)).accepted
        mutable_obj["scenes"][0]["output"] = ["$target_principles"]
        assert validate(document_from_dict(mutable_obj)).accepted
