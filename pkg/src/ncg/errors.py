"""Exception taxonomy shared across the package.

Each pipeline stage raises a distinct subclass so the CLI can map failures
to stable exit codes (see cli.EXIT_CODES).
"""


class NcgError(Exception):
    """Base class for all package errors."""


class ConfigurationError(NcgError):
    """Invalid or missing configuration (bad config file, missing API key,
    missing model, empty bond schema)."""


class GatewayError(NcgError):
    """Provider transport failure that survived the retry budget."""


class CassetteMissError(GatewayError):
    """Replay requested for a request that was never recorded."""

    def __init__(self, template_id: str, request_hash: str):
        super().__init__(
            f"cassette miss for template {template_id!r} (request {request_hash[:12]})"
        )
        self.template_id = template_id
        self.request_hash = request_hash


class TemplateError(NcgError):
    """Unknown template or unbound template variables."""


class ExtractionError(NcgError):
    """Vertex extraction produced no usable sentences."""


class ParseError(NcgError):
    """LLM response did not match the expected answer grammar."""

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class ContractError(NcgError):
    """Caller violated an operation precondition (length mismatch,
    layout mismatch, empty input)."""


class DegenerateDataError(NcgError):
    """Training data lacks the class diversity required to fit a model."""


class DegenerateAgreementError(NcgError):
    """Cohen's kappa is undefined because expected agreement is 1."""


class DegeneratePairError(NcgError):
    """Pairwise judging refused because both graphs are identical."""


class PartialJudgeError(NcgError):
    """Some judging dimensions could not be parsed from the response."""

    def __init__(self, missing: list[str], raw_text: str = ""):
        super().__init__(f"no verdict parsed for dimensions: {', '.join(missing)}")
        self.missing = missing
        self.raw_text = raw_text


class IntegrityError(NcgError):
    """A structural invariant was violated (dangling edge endpoint,
    duplicate vertex id, malformed document)."""


class WorkspaceLockedError(NcgError):
    """Another pipeline run holds the workspace lock."""
