"""Staged document-to-record normalization through a text backend.

The pipeline runs three generation passes (skill record, scenes, logic
steps), assembles one candidate record, and applies the deterministic
validation gate as the fourth pass. Candidates that fail parsing or hard
validation are regenerated under a primary budget and then a retry
budget; nothing is repaired silently and no field is invented on the
model's behalf.
"""

from __future__ import annotations

import json
import os
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Protocol, Sequence

import requests

from . import records
from .document import (
    ActType,
    ResourceScope,
    SceneType,
    SslDocument,
    document_from_dict,
    document_to_dict,
    parse_document,
)
from .errors import (
    BackendUnavailable,
    DuplicateSkillId,
    EmptyAudit,
    MissingPartialState,
    NonConformingOutput,
    ParseError,
)
from .validation import (
    IssueCode,
    Severity,
    ValidationIssue,
    ValidationReport,
    validate,
)


class GenerationBackend(Protocol):
    """Anything that turns a prompt into text.

    The toolkit never assumes a specific provider; tests use scripted
    fakes and production wires an HTTP endpoint. ``thinking`` is opaque
    backend metadata.
    """

    def generate(self, prompt: str, temperature: float, thinking: bool) -> str: ...


class NormalizerStage(str, Enum):
    PASS1 = "pass1"  # skill record extraction
    PASS2 = "pass2"  # scene decomposition
    PASS3 = "pass3"  # logic-step expansion
    PASS4 = "pass4"  # verification and validation


@dataclass(frozen=True)
class NormalizerConfig:
    primary_attempts: int = 5
    retry_pass_attempts: int = 3
    primary_temperature: float = 0.1
    retry_temperature: float = 0.1
    thinking_primary: bool = True
    thinking_retry: bool = False

    def __post_init__(self) -> None:
        if self.primary_attempts < 1 or self.retry_pass_attempts < 1:
            raise ValueError("attempt budgets must be >= 1")
        for t in (self.primary_temperature, self.retry_temperature):
            if not 0.0 <= t <= 2.0:
                raise ValueError(f"temperature {t} outside [0, 2]")

    @classmethod
    def from_mapping(cls, raw: dict[str, str]) -> "NormalizerConfig":
        kwargs: dict = {}
        for key in ("primary_attempts", "retry_pass_attempts"):
            if key in raw:
                kwargs[key] = int(raw[key])
        for key in ("primary_temperature", "retry_temperature"):
            if key in raw:
                kwargs[key] = float(raw[key])
        for key in ("thinking_primary", "thinking_retry"):
            if key in raw:
                kwargs[key] = raw[key].strip().lower() in ("1", "true", "yes", "on")
        return cls(**kwargs)


class NormalizationStatus(str, Enum):
    ACCEPTED = "accepted"
    FAILED = "failed"


@dataclass
class NormalizationOutcome:
    status: NormalizationStatus
    document: SslDocument | None
    attempts_used: int
    issues: list[ValidationReport] = field(default_factory=list)


@dataclass(frozen=True)
class YieldReport:
    total: int
    accepted: int
    yield_fraction: float
    empty_corpus: bool = False


# --- prompt assembly -----------------------------------------------------

_SCHEMA_VOCABULARIES = "\n".join(
    [
        "Allowed vocabularies (closed sets, any other token is invalid):",
        "  scene_type: " + ", ".join(v.value for v in SceneType),
        "  act_type: " + ", ".join(v.value for v in ActType),
        "  resource_scope: " + ", ".join(v.value for v in ResourceScope),
        "  transition terminals: END_SUCCESS, END_FAIL (scene level only);"
        " YIELD_SUCCESS, YIELD_FAIL (logic-step level only)",
        "  data-flow variables start with '$'; unprefixed strings are literal"
        " labels, resources, or conditions",
    ]
)

_GROUNDING_POLICY = (
    "Grounding policy: populate fields only with evidence stated in the source"
    " document. Do not infer hidden intent, add unstated runtime behavior, or"
    " complete missing steps from background knowledge. If the source does not"
    " support a field, leave it empty, null, or at the coarsest supported"
    " category."
)

_OUTPUT_MODE_RULE = (
    "Output mode: act only as a converter from the skill document to the"
    " record format. Output raw JSON only, with no Markdown fences, no prose"
    " explanation, and no conversational text."
)

# Minimal worked example: a skill that validates its inputs, calls a remote
# API, yields success or failure from the logic-step graph, and then
# terminates the scene graph.
ONE_SHOT_EXAMPLE = json.dumps(
    {
        "skill": {
            "skill_id": "SKILL_API_RELAY",
            "skill_name": "API Relay",
            "skill_goal": "Validate a request and forward it to a remote API.",
            "top_pattern": "VALIDATE_AND_CALL",
            "expected_inputs": [
                {"name": "api_endpoint", "type": "str"},
                {"name": "payload", "type": "str"},
            ],
            "expected_outputs": [{"name": "api_response", "type": "str"}],
            "dependencies": [{"type": "capability", "value": "network.http"}],
            "tags": ["api", "integration"],
            "intent_signature": ["call this api", "forward a request"],
            "control_flow_features": {
                "has_branch": True,
                "has_loop": False,
                "has_tool_call": True,
                "touches_sensitive_resources": True,
            },
            "entry_scene_id": "S_VALIDATE",
            "subscenes": ["S_VALIDATE", "S_CALL"],
        },
        "scenes": [
            {
                "scene_id": "S_VALIDATE",
                "scene_name": "Validate request",
                "scene_type": "PREPARE",
                "scene_goal": "Check that the request names an endpoint and a payload.",
                "input": ["$api_endpoint", "$payload"],
                "output": ["$request_valid"],
                "entry_conditions": ["skill_dispatched"],
                "exit_conditions": ["request_checked"],
                "entry_logic_step_id": "L_CHECK_INPUT",
                "contained_logic_steps": ["L_CHECK_INPUT"],
                "next_scene_rules": [
                    {"condition": "success", "target": "S_CALL"},
                    {"condition": "default", "target": "END_FAIL"},
                ],
            },
            {
                "scene_id": "S_CALL",
                "scene_name": "Call remote API",
                "scene_type": "ACT",
                "scene_goal": "Send the payload to the endpoint and capture the response.",
                "input": ["$api_endpoint", "$payload"],
                "output": ["$api_response"],
                "entry_conditions": ["request_checked"],
                "exit_conditions": ["response_received"],
                "entry_logic_step_id": "L_CALL_API",
                "contained_logic_steps": ["L_CALL_API"],
                "next_scene_rules": [
                    {"condition": "success", "target": "END_SUCCESS"},
                    {"condition": "default", "target": "END_FAIL"},
                ],
            },
        ],
        "logic_steps": [
            {
                "logic_step_id": "L_CHECK_INPUT",
                "act_type": "VALIDATE",
                "input_args": ["$api_endpoint", "$payload"],
                "output_binding": "$request_valid",
                "actor": "skill",
                "object": "user_request",
                "instrument": None,
                "preconditions": ["skill_dispatched"],
                "effects": ["$request_valid == true"],
                "resource_scope": "MEMORY",
                "resource_target": "working_memory.request",
                "next_step_rules": [
                    {"condition": "$request_valid == true", "target": "YIELD_SUCCESS"},
                    {"condition": "default", "target": "YIELD_FAIL"},
                ],
            },
            {
                "logic_step_id": "L_CALL_API",
                "act_type": "CALL_TOOL",
                "input_args": ["$api_endpoint", "$payload"],
                "output_binding": "$api_response",
                "actor": "skill",
                "object": "remote_api",
                "instrument": "http_client",
                "preconditions": ["$request_valid == true"],
                "effects": ["response_received"],
                "resource_scope": "NETWORK",
                "resource_target": "$api_endpoint",
                "next_step_rules": [
                    {"condition": "success", "target": "YIELD_SUCCESS"},
                    {"condition": "default", "target": "YIELD_FAIL"},
                ],
            },
        ],
    },
    indent=2,
)

_STAGE_INSTRUCTIONS = {
    NormalizerStage.PASS1: (
        "Pass 1 - skill record extraction. Extract the skill-level scheduling"
        " record from the source document. Return one JSON object with exactly"
        " these keys: skill_id, skill_name, skill_goal, top_pattern,"
        " expected_inputs, expected_outputs, dependencies, tags,"
        " intent_signature, control_flow_features, entry_scene_id, subscenes."
        " expected_inputs and expected_outputs are lists of {name, type};"
        " dependencies is a list of {type, value}; control_flow_features has"
        " the four booleans has_branch, has_loop, has_tool_call,"
        " touches_sensitive_resources."
    ),
    NormalizerStage.PASS2: (
        "Pass 2 - scene decomposition. Decompose the skill into two to five"
        " macro-level scenes when the source supports them. Keep scenes at the"
        " phase/milestone level, each with scene_id, scene_name, scene_type,"
        " scene_goal, input, output, entry_conditions, exit_conditions,"
        " entry_logic_step_id, contained_logic_steps, and next_scene_rules"
        " whose targets name another scene or END_SUCCESS/END_FAIL. Return one"
        ' JSON object of the form {"scenes": [...]}.'
    ),
    NormalizerStage.PASS3: (
        "Pass 3 - logic-step expansion. Expand each scene into grounded atomic"
        " operations, each with logic_step_id, act_type, input_args,"
        " output_binding, actor, object, instrument, preconditions, effects,"
        " resource_scope, resource_target, and next_step_rules whose targets"
        " name another step in the same scene or YIELD_SUCCESS/YIELD_FAIL."
        ' Return one JSON object of the form {"logic_steps": [...]}.'
    ),
    NormalizerStage.PASS4: (
        "Pass 4 - verification and validation. Verify layer alignment and"
        " reject malformed output: identifiers globally unique, enum values"
        " from the allowed vocabularies, transition targets resolvable in"
        " their own layer, containment links and entry pointers valid, and"
        " scene outputs backed by logic-step bindings. Report violations"
        " rather than repairing them."
    ),
}


def build_prompt(
    stage: NormalizerStage, source_md: str, partial: str | None = None
) -> str:
    """Assemble the deterministic instruction for one pipeline pass.

    ``partial`` carries the record text accumulated by earlier passes and
    is required for passes 2-4.
    """
    if stage is not NormalizerStage.PASS1 and partial is None:
        raise MissingPartialState(f"{stage.value} requires the partial record from earlier passes")
    parts = [
        _STAGE_INSTRUCTIONS[stage],
        "",
        _SCHEMA_VOCABULARIES,
        "",
        _GROUNDING_POLICY,
        _OUTPUT_MODE_RULE,
        "",
        "Example of a complete normalized record:",
        ONE_SHOT_EXAMPLE,
        "",
        "Source document:",
        source_md,
    ]
    if partial is not None:
        parts += ["", "Partial record from earlier passes:", partial]
    return "\n".join(parts)


def extract_payload(response: str) -> str:
    """Strict output gate: the response must be a single raw JSON object.

    Markdown fences, prose, arrays, or trailing text all fail and count
    as a retry trigger upstream. Returns the payload text unchanged
    (modulo surrounding whitespace).
    """
    payload = response.strip()
    if not payload.startswith("{"):
        raise NonConformingOutput("response is not a bare JSON object")
    try:
        obj = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise NonConformingOutput(f"response is not parseable JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise NonConformingOutput("response is not a JSON object")
    return payload


_PARSE_CODE = {
    "MalformedSyntax": IssueCode.MALFORMED_SYNTAX,
    "MissingField": IssueCode.MISSING_FIELD,
    "UnknownEnumValue": IssueCode.UNKNOWN_ENUM_VALUE,
    "WrongKind": IssueCode.WRONG_KIND,
    "UnexpectedField": IssueCode.UNEXPECTED_FIELD,
}


def _failure_report(code: IssueCode, location: str, message: str) -> ValidationReport:
    issue = ValidationIssue(Severity.HARD, code, location, message)
    return ValidationReport(issues=[issue], accepted=False)


def _attempt(
    source_md: str, backend: GenerationBackend, temperature: float, thinking: bool
) -> tuple[SslDocument | None, ValidationReport]:
    """One full generation of the candidate record: passes 1-3 plus the
    deterministic validation gate (pass 4)."""
    try:
        p1 = extract_payload(
            backend.generate(build_prompt(NormalizerStage.PASS1, source_md), temperature, thinking)
        )
        p2 = extract_payload(
            backend.generate(
                build_prompt(NormalizerStage.PASS2, source_md, partial=p1),
                temperature,
                thinking,
            )
        )
        partial = json.dumps(
            {"skill": json.loads(p1), **json.loads(p2)}, ensure_ascii=False
        )
        p3 = extract_payload(
            backend.generate(
                build_prompt(NormalizerStage.PASS3, source_md, partial=partial),
                temperature,
                thinking,
            )
        )
    except NonConformingOutput as exc:
        return None, _failure_report(IssueCode.NON_CONFORMING_OUTPUT, "$", str(exc))
    except BackendUnavailable as exc:
        return None, _failure_report(IssueCode.BACKEND_UNAVAILABLE, "$", str(exc))

    candidate = json.dumps(
        {
            "skill": json.loads(p1),
            "scenes": json.loads(p2).get("scenes"),
            "logic_steps": json.loads(p3).get("logic_steps"),
        },
        ensure_ascii=False,
    )
    try:
        doc = parse_document(candidate)
    except ParseError as exc:
        code = _PARSE_CODE[type(exc).__name__]
        return None, _failure_report(code, exc.path, str(exc))

    report = validate(doc)
    if report.accepted:
        return doc, report
    return None, report


def normalize_skill(
    source_md: str,
    backend: GenerationBackend,
    cfg: NormalizerConfig | None = None,
) -> NormalizationOutcome:
    """Normalize one source document under the configured retry budgets.

    Each attempt regenerates the whole record. The primary budget runs
    with the primary temperature/thinking settings, then remaining
    failures consume the retry budget with the retry settings. A backend
    outage consumes the attempt like any other failure.
    """
    cfg = cfg or NormalizerConfig()
    history: list[ValidationReport] = []
    attempts_used = 0
    phases = (
        (cfg.primary_attempts, cfg.primary_temperature, cfg.thinking_primary),
        (cfg.retry_pass_attempts, cfg.retry_temperature, cfg.thinking_retry),
    )
    for budget, temperature, thinking in phases:
        for _ in range(budget):
            attempts_used += 1
            doc, report = _attempt(source_md, backend, temperature, thinking)
            history.append(report)
            if doc is not None:
                return NormalizationOutcome(
                    status=NormalizationStatus.ACCEPTED,
                    document=doc,
                    attempts_used=attempts_used,
                    issues=history,
                )
    return NormalizationOutcome(
        status=NormalizationStatus.FAILED,
        document=None,
        attempts_used=attempts_used,
        issues=history,
    )


# --- corpus runs and checkpointing ----------------------------------------


def report_to_obj(report: ValidationReport) -> dict:
    return {
        "accepted": report.accepted,
        "issues": [
            {
                "severity": i.severity.value,
                "code": i.code.value,
                "location": i.location,
                "message": i.message,
            }
            for i in report.issues
        ],
    }


def report_from_obj(obj: dict) -> ValidationReport:
    issues = [
        ValidationIssue(
            Severity(i["severity"]), IssueCode(i["code"]), i["location"], i["message"]
        )
        for i in obj["issues"]
    ]
    return ValidationReport(issues=issues, accepted=obj["accepted"])


def outcome_to_obj(skill_id: str, outcome: NormalizationOutcome) -> dict:
    return {
        "skill_id": skill_id,
        "status": outcome.status.value,
        "attempts_used": outcome.attempts_used,
        "document": document_to_dict(outcome.document) if outcome.document else None,
        "issues": [report_to_obj(r) for r in outcome.issues],
    }


def outcome_from_obj(obj: dict) -> tuple[str, NormalizationOutcome]:
    doc = document_from_dict(obj["document"]) if obj.get("document") else None
    outcome = NormalizationOutcome(
        status=NormalizationStatus(obj["status"]),
        document=doc,
        attempts_used=obj["attempts_used"],
        issues=[report_from_obj(r) for r in obj.get("issues", [])],
    )
    return obj["skill_id"], outcome


def normalize_corpus(
    sources: Sequence[tuple[str, str]],
    backend: GenerationBackend,
    cfg: NormalizerConfig | None = None,
    checkpoint_path: str | Path | None = None,
) -> tuple[dict[str, NormalizationOutcome], YieldReport]:
    """Normalize (skill_id, source_text) pairs and account for yield.

    With a checkpoint path, finished skills are appended as they
    complete and skipped on resume.
    """
    ids = [sid for sid, _ in sources]
    dupes = sorted(i for i, c in Counter(ids).items() if c > 1)
    if dupes:
        raise DuplicateSkillId(f"duplicate skill ids: {dupes}")

    outcomes: dict[str, NormalizationOutcome] = {}
    if checkpoint_path is not None and Path(checkpoint_path).exists():
        for _, obj in records.read_jsonl(checkpoint_path):
            sid, outcome = outcome_from_obj(obj)
            outcomes[sid] = outcome

    for sid, source_md in sources:
        if sid in outcomes:
            continue
        outcome = normalize_skill(source_md, backend, cfg)
        outcomes[sid] = outcome
        if checkpoint_path is not None:
            records.append_jsonl(checkpoint_path, outcome_to_obj(sid, outcome))

    ordered = {sid: outcomes[sid] for sid, _ in sources}
    accepted = sum(
        1 for o in ordered.values() if o.status is NormalizationStatus.ACCEPTED
    )
    total = len(sources)
    if total == 0:
        # Degenerate corpus: report full yield but flag the anomaly.
        report = YieldReport(total=0, accepted=0, yield_fraction=1.0, empty_corpus=True)
    else:
        report = YieldReport(total=total, accepted=accepted, yield_fraction=accepted / total)
    return ordered, report


@dataclass(frozen=True)
class AuditItem:
    claim_id: str
    label: str  # "yes" (supported by the source) or "no"

    def __post_init__(self) -> None:
        if self.label not in ("yes", "no"):
            raise ValueError(f"audit label must be yes|no, got {self.label!r}")


def support_accuracy(audit_items: Sequence[AuditItem]) -> float:
    """Fraction of audited claims judged supported by their source."""
    if not audit_items:
        raise EmptyAudit("no audit items")
    return sum(1 for item in audit_items if item.label == "yes") / len(audit_items)


class HttpGenerationBackend:
    """POSTs {prompt, temperature, thinking} to an endpoint returning {text}.

    The credential is read from the environment, never from flags or
    files, and sent as a bearer token.
    """

    def __init__(self, url: str, api_key_env: str = "SSLKIT_API_KEY", timeout: float = 120.0):
        self.url = url
        self.api_key_env = api_key_env
        self.timeout = timeout

    def generate(self, prompt: str, temperature: float, thinking: bool) -> str:
        headers = {}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = requests.post(
                self.url,
                json={"prompt": prompt, "temperature": temperature, "thinking": thinking},
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise BackendUnavailable(str(exc)) from None
        if resp.status_code != 200:
            raise BackendUnavailable(f"backend returned HTTP {resp.status_code}")
        try:
            return resp.json()["text"]
        except (ValueError, KeyError) as exc:
            raise BackendUnavailable(f"malformed backend response: {exc}") from None
