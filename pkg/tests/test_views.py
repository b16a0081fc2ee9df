from __future__ import annotations

import json
from pathlib import Path

import pytest

from sslkit import (
    RepresentationVariant,
    compose_input,
    document_from_dict,
    project_rich,
    project_sched,
    project_shallow,
    source_outline,
)
from sslkit.errors import MissingSslDocument
from sslkit.views import AUGMENTATION_SEPARATOR, BULLET_CHAR_LIMIT, PROSE_CHAR_LIMIT

DATA = Path(__file__).parent / "data"


class TestShallow:
    def test_contains_exact_fields(self, fixture_doc):
        text = project_shallow(fixture_doc)
        assert "skill_name: Writing Refiner" in text
        assert "tags: writing, editing, documentation" in text
        assert "skill_goal: Revise user-provided text for clarity and concision." in text

    def test_empty_tags_render_empty(self, mutable_obj):
        mutable_obj["skill"]["tags"] = []
        text = project_shallow(document_from_dict(mutable_obj))
        assert "tags:" in text

    def test_independent_of_logic_steps(self, fixture_obj, mutable_obj):
        mutable_obj["logic_steps"][0]["actor"] = "different_actor"
        a = project_shallow(document_from_dict(fixture_obj))
        b = project_shallow(document_from_dict(mutable_obj))
        assert a == b


class TestSched:
    def test_scene_profile_follows_subscenes(self, fixture_doc):
        assert "scene_profile: PREPARE, ACQUIRE, REASON" in project_sched(fixture_doc)

    def test_control_flow_line(self, fixture_doc):
        text = project_sched(fixture_doc)
        assert (
            "has_branch=true, has_loop=false, has_tool_call=true,"
            " touches_sensitive_resources=false" in text
        )

    def test_permuted_subscenes_permute_profile(self, mutable_obj):
        mutable_obj["skill"]["subscenes"] = ["S_REVISE", "S_PREPARE", "S_ACQUIRE"]
        mutable_obj["skill"]["entry_scene_id"] = "S_PREPARE"
        text = project_sched(document_from_dict(mutable_obj))
        assert "scene_profile: REASON, PREPARE, ACQUIRE" in text

    def test_intent_signature_rendered(self, fixture_doc):
        assert "intent_signature: improve this text; edit for concision" in project_sched(fixture_doc)


class TestRich:
    def test_superset_of_sched_content(self, fixture_doc):
        text = project_rich(fixture_doc)
        assert "skill_id: SKILL_WRITING_REFINER" in text
        assert "top_pattern: GUIDE_AND_APPLY" in text
        assert "- PREPARE: Validate the request and infer the editing intent." in text
        assert "- ACQUIRE: Load the style guidance needed for the task." in text
        assert "- REASON: Apply the selected rules and return the revision." in text
        assert "permission=filesystem.read" in text
        assert "expected_inputs: draft_text:str, writing_context:str" in text
        assert "expected_outputs: revised_text:str, applied_principles:list" in text

    def test_rich_at_least_as_long_as_sched(self, fixture_doc):
        assert len(project_rich(fixture_doc)) >= len(project_sched(fixture_doc))

    def test_zero_dependencies_render_empty(self, mutable_obj):
        mutable_obj["skill"]["dependencies"] = []
        text = project_rich(document_from_dict(mutable_obj))
        assert "dependencies:" in text
        assert "permission=" not in text


class TestSourceOutline:
    def test_heading_and_bullet_within_limits(self):
        md = "# Setup\n\n- install the thing and configure it\n"
        out = source_outline(md)
        assert "# Setup" in out
        assert "- install the thing and configure it" in out

    def test_empty_document(self):
        assert source_outline("") == ""

    def test_golden_file(self):
        md = (DATA / "outline_fixture.md").read_text(encoding="utf-8")
        golden = (DATA / "outline_fixture.golden.txt").read_text(encoding="utf-8")
        assert source_outline(md) + "\n" == golden

    def test_long_bullet_dropped(self):
        md = "# T\n\n- " + "x" * (BULLET_CHAR_LIMIT + 10) + "\n- short\n"
        out = source_outline(md)
        assert "- short" in out
        assert "x" * 50 not in out

    def test_prose_truncated(self):
        md = "# T\n\n" + "word " * 100 + "\n"
        out = source_outline(md)
        prose = out.splitlines()[1]
        assert len(prose) == PROSE_CHAR_LIMIT

    def test_second_prose_span_dropped(self):
        md = "# T\n\nfirst span here\n\nsecond span here\n"
        out = source_outline(md)
        assert "first span here" in out
        assert "second span here" not in out

    def test_interface_lines_kept(self):
        md = "\n".join(
            [
                "plain prose line one",
                "",
                "see https://host/path for details",
                "stored under data/cache.json somewhere",
                "api: requires a token",
                "use `inline code` here",
            ]
        )
        out = source_outline(md)
        assert "see https://host/path for details" in out
        assert "stored under data/cache.json somewhere" in out
        assert "api: requires a token" in out
        assert "use `inline code` here" in out

    def test_deterministic(self):
        md = (DATA / "outline_fixture.md").read_text(encoding="utf-8")
        assert source_outline(md) == source_outline(md)


class TestComposeInput:
    def test_desc_only(self, fixture_doc):
        view = compose_input(RepresentationVariant.DESC_ONLY, "short desc", "full md")
        assert view.text == "short desc"

    def test_full_md(self, fixture_doc):
        view = compose_input(RepresentationVariant.FULL_MD, "short desc", "full md")
        assert view.text == "full md"

    def test_desc_rich_is_concatenation(self, fixture_doc):
        view = compose_input(
            RepresentationVariant.DESC_RICH, "short desc", "full md", fixture_doc
        )
        assert view.text == "short desc" + AUGMENTATION_SEPARATOR + project_rich(fixture_doc)
        assert view.skill_id == "SKILL_WRITING_REFINER"

    def test_md_shallow_is_concatenation(self, fixture_doc):
        view = compose_input(
            RepresentationVariant.MD_SHALLOW, "short desc", "full md", fixture_doc
        )
        assert view.text == "full md" + AUGMENTATION_SEPARATOR + project_shallow(fixture_doc)

    def test_missing_document_raises(self):
        for variant in (
            RepresentationVariant.DESC_SHALLOW,
            RepresentationVariant.DESC_SCHED,
            RepresentationVariant.DESC_RICH,
            RepresentationVariant.MD_SHALLOW,
            RepresentationVariant.MD_SCHED,
            RepresentationVariant.MD_RICH,
        ):
            with pytest.raises(MissingSslDocument):
                compose_input(variant, "d", "m", None)

    def test_all_ten_variants_total(self, fixture_doc):
        for variant in RepresentationVariant:
            view = compose_input(variant, "the description", "# md body", fixture_doc)
            assert view.variant is variant
            assert isinstance(view.text, str)

    def test_repeated_calls_byte_identical(self, fixture_doc):
        for variant in RepresentationVariant:
            a = compose_input(variant, "d", "# m", fixture_doc).text
            b = compose_input(variant, "d", "# m", fixture_doc).text
            assert a == b

    def test_source_only_variants_never_leak_record_tokens(self, mutable_obj):
        sentinel = "XZQSENTINELTOKENQZX"
        mutable_obj["skill"]["skill_goal"] = f"goal with {sentinel}"
        mutable_obj["skill"]["tags"] = [sentinel]
        mutable_obj["scenes"][0]["scene_goal"] = sentinel
        doc = document_from_dict(mutable_obj)
        md = "# Title\n\nplain body text\n"
        for variant in (
            RepresentationVariant.SOURCE_OUTLINE,
            RepresentationVariant.DESC_PLUS_OUTLINE,
        ):
            view = compose_input(variant, "clean desc", md, doc)
            assert sentinel not in view.text
