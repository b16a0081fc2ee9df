"""Deterministic text renderings used as retrieval inputs.

Ten variants: two text-only baselines (description, full source
document), two source-outline controls, and six structured augmentations
at three depths (shallow / scheduling / rich) over either base context.
Every projector is a pure function; repeated calls yield byte-identical
text, because these strings feed embedding backends.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .document import SslDocument
from .errors import MissingSslDocument

# Conservative fixed limits for the outline control; the extraction is a
# deterministic baseline, not a summarizer.
BULLET_CHAR_LIMIT = 160
PROSE_CHAR_LIMIT = 240

# Fixed delimiter between the base context and its augmentation.
AUGMENTATION_SEPARATOR = "\n\n--- structured augmentation ---\n"


class RepresentationVariant(str, Enum):
    DESC_ONLY = "DESC_ONLY"
    FULL_MD = "FULL_MD"
    SOURCE_OUTLINE = "SOURCE_OUTLINE"
    DESC_PLUS_OUTLINE = "DESC_PLUS_OUTLINE"
    DESC_SHALLOW = "DESC_SHALLOW"
    DESC_SCHED = "DESC_SCHED"
    DESC_RICH = "DESC_RICH"
    MD_SHALLOW = "MD_SHALLOW"
    MD_SCHED = "MD_SCHED"
    MD_RICH = "MD_RICH"


SSL_VARIANTS = frozenset(
    {
        RepresentationVariant.DESC_SHALLOW,
        RepresentationVariant.DESC_SCHED,
        RepresentationVariant.DESC_RICH,
        RepresentationVariant.MD_SHALLOW,
        RepresentationVariant.MD_SCHED,
        RepresentationVariant.MD_RICH,
    }
)


@dataclass(frozen=True)
class ProjectedView:
    variant: RepresentationVariant
    text: str
    skill_id: str


def _scene_profile(doc: SslDocument) -> str:
    # Ordered scene_type sequence following subscenes order.
    scenes = doc.scene_by_id()
    types = [
        scenes[sid].scene_type.value for sid in doc.skill.subscenes if sid in scenes
    ]
    return ", ".join(types)


def _control_flow_line(doc: SslDocument) -> str:
    cff = doc.skill.control_flow_features
    flags = [
        ("has_branch", cff.has_branch),
        ("has_loop", cff.has_loop),
        ("has_tool_call", cff.has_tool_call),
        ("touches_sensitive_resources", cff.touches_sensitive_resources),
    ]
    return ", ".join(f"{name}={'true' if value else 'false'}" for name, value in flags)


def project_shallow(doc: SslDocument) -> str:
    """Name, tags, and goal only."""
    skill = doc.skill
    return "\n".join(
        [
            f"skill_name: {skill.skill_name}",
            f"tags: {', '.join(skill.tags)}",
            f"skill_goal: {skill.skill_goal}",
        ]
    )


def project_sched(doc: SslDocument) -> str:
    """Compact scheduling view: interface signals plus the scene profile."""
    skill = doc.skill
    return "\n".join(
        [
            f"skill_name: {skill.skill_name}",
            f"skill_goal: {skill.skill_goal}",
            f"tags: {', '.join(skill.tags)}",
            f"intent_signature: {'; '.join(skill.intent_signature)}",
            f"control_flow_features: {_control_flow_line(doc)}",
            f"scene_profile: {_scene_profile(doc)}",
        ]
    )


def project_rich(doc: SslDocument) -> str:
    """Scheduling view plus identifier, per-scene goals, dependencies,
    top pattern, and the declared input/output contract."""
    skill = doc.skill
    scenes = doc.scene_by_id()
    lines = [
        f"skill_id: {skill.skill_id}",
        f"skill_name: {skill.skill_name}",
        f"skill_goal: {skill.skill_goal}",
        f"tags: {', '.join(skill.tags)}",
        f"intent_signature: {'; '.join(skill.intent_signature)}",
        f"top_pattern: {skill.top_pattern}",
        f"control_flow_features: {_control_flow_line(doc)}",
        f"scene_profile: {_scene_profile(doc)}",
        "scenes:",
    ]
    for sid in skill.subscenes:
        scene = scenes.get(sid)
        if scene is not None:
            lines.append(f"- {scene.scene_type.value}: {scene.scene_goal}")
    lines.append(
        "dependencies: "
        + "; ".join(f"{d.type}={d.value}" for d in skill.dependencies)
    )
    lines.append(
        "expected_inputs: "
        + ", ".join(f"{f.name}:{f.type}" for f in skill.expected_inputs)
    )
    lines.append(
        "expected_outputs: "
        + ", ".join(f"{f.name}:{f.type}" for f in skill.expected_outputs)
    )
    return "\n".join(lines)


_HEADING_RE = re.compile(r"^#{1,6}\s")
_BULLET_RE = re.compile(r"^\s{0,3}(?:[-*+]|\d{1,3}[.)])\s+")
_FENCE_RE = re.compile(r"^\s{0,3}(?:```|~~~)")
_PATH_RE = re.compile(r"[\w~.-]*[/\\][\w.\-/\\]*\.[A-Za-z0-9]{1,8}\b")
_KV_KEYWORD_RE = re.compile(
    r"\b(input|output|permission|token|api|credential|secret|endpoint)\b", re.IGNORECASE
)


def _looks_interfaceish(line: str, *, allow_code_span: bool = True) -> bool:
    if "://" in line:
        return True
    if allow_code_span and "`" in line:
        return True
    if _PATH_RE.search(line):
        return True
    if ":" in line and _KV_KEYWORD_RE.search(line):
        return True
    return False


def source_outline(md: str) -> str:
    """Deterministic excerpt of a source document.

    Keeps heading lines, short bullet items, interface- or
    resource-looking lines (URLs, paths with extensions, key:value pairs
    around I/O or credential keywords, inline code), and the first prose
    span of each section truncated to a fixed length, all in document
    order. Identical input always yields identical output.
    """
    out: list[str] = []
    prose_run: list[str] = []
    prose_taken = False  # first prose span of the current section emitted?
    in_fence = False

    def flush_prose() -> None:
        nonlocal prose_taken
        if prose_run and not prose_taken:
            out.append(" ".join(prose_run)[:PROSE_CHAR_LIMIT])
            prose_taken = True
        prose_run.clear()

    for raw in md.splitlines():
        line = raw.strip()
        if _FENCE_RE.match(raw):
            flush_prose()
            in_fence = not in_fence
            continue
        if in_fence:
            flush_prose()
            if line and _looks_interfaceish(line, allow_code_span=False):
                out.append(line)
            continue
        if not line:
            flush_prose()
        elif _HEADING_RE.match(line):
            flush_prose()
            out.append(line)
            prose_taken = False
        elif _BULLET_RE.match(raw):
            flush_prose()
            if len(line) <= BULLET_CHAR_LIMIT:
                out.append(line)
        elif _looks_interfaceish(line):
            flush_prose()
            out.append(line)
        else:
            prose_run.append(line)
    flush_prose()
    return "\n".join(out)


def compose_input(
    variant: RepresentationVariant,
    desc: str,
    md: str,
    doc: SslDocument | None = None,
    skill_id: str = "",
) -> ProjectedView:
    """Assemble the retrieval input for one variant.

    ``doc`` is required exactly for the six structured variants. The
    outline variants are computed from the source document alone and
    never read ``doc``.
    """
    if variant in SSL_VARIANTS and doc is None:
        raise MissingSslDocument(f"variant {variant.value} requires a structured record")
    if not skill_id and doc is not None:
        skill_id = doc.skill.skill_id

    if variant is RepresentationVariant.DESC_ONLY:
        text = desc
    elif variant is RepresentationVariant.FULL_MD:
        text = md
    elif variant is RepresentationVariant.SOURCE_OUTLINE:
        text = source_outline(md)
    elif variant is RepresentationVariant.DESC_PLUS_OUTLINE:
        text = desc + AUGMENTATION_SEPARATOR + source_outline(md)
    else:
        assert doc is not None
        projector = {
            RepresentationVariant.DESC_SHALLOW: project_shallow,
            RepresentationVariant.DESC_SCHED: project_sched,
            RepresentationVariant.DESC_RICH: project_rich,
            RepresentationVariant.MD_SHALLOW: project_shallow,
            RepresentationVariant.MD_SCHED: project_sched,
            RepresentationVariant.MD_RICH: project_rich,
        }[variant]
        base = (
            desc
            if variant
            in (
                RepresentationVariant.DESC_SHALLOW,
                RepresentationVariant.DESC_SCHED,
                RepresentationVariant.DESC_RICH,
            )
            else md
        )
        text = base + AUGMENTATION_SEPARATOR + projector(doc)

    return ProjectedView(variant=variant, text=text, skill_id=skill_id)
