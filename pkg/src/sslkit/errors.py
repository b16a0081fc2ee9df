"""Exception types shared across the toolkit."""

from __future__ import annotations


class SslError(Exception):
    """Base class for all toolkit errors."""


class ParseError(SslError):
    """A skill record failed structural parsing.

    ``path`` points at the first offending location, e.g.
    ``scenes[0].scene_type``.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class MalformedSyntax(ParseError):
    def __init__(self, message: str = "not a valid JSON object"):
        super().__init__("$", message)


class MissingField(ParseError):
    def __init__(self, path: str):
        super().__init__(path, "required field is missing")


class UnknownEnumValue(ParseError):
    def __init__(self, path: str, token: str):
        super().__init__(path, f"unknown enum value {token!r}")
        self.token = token


class WrongKind(ParseError):
    def __init__(self, path: str, message: str = "wrong field kind"):
        super().__init__(path, message)


class UnexpectedField(ParseError):
    def __init__(self, path: str):
        super().__init__(path, "unexpected field")


class DanglingTarget(SslError):
    """A transition target names no node in its scope."""

    def __init__(self, target: str, scope: str):
        super().__init__(f"target {target!r} does not resolve in {scope}")
        self.target = target
        self.scope = scope


class WrongLayerTerminal(SslError):
    """A terminal symbol was used outside its layer (END_* vs YIELD_*)."""

    def __init__(self, target: str, scope: str):
        super().__init__(f"terminal {target!r} is not valid in {scope}")
        self.target = target
        self.scope = scope


class MissingSslDocument(SslError):
    """A view variant that needs a structured record was given none."""


class MissingPartialState(SslError):
    """A later pipeline pass was invoked without earlier pass output."""


class NonConformingOutput(SslError):
    """Backend output was not a single raw JSON object."""


class BackendUnavailable(SslError):
    """The generation or embedding backend could not serve a call."""


class DuplicateSkillId(SslError):
    pass


class EmptyAudit(SslError):
    pass


class ZeroVector(SslError):
    pass


class DimensionMismatch(SslError):
    pass


class WrongVoteCount(SslError):
    pass


class IncompleteVote(SslError):
    pass


class ReviewCoverageMismatch(SslError):
    pass


class LengthMismatch(SslError):
    pass


class EmptySet(SslError):
    pass


class MissingDimension(SslError):
    pass


class EmptyUnits(SslError):
    pass
