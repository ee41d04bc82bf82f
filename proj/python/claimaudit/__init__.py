"""Claim-level hallucination auditing."""

import json

from . import _core
from ._core import (
    ClaimAuditError,
    ConfigError,
    ConsistencyError,
    DecodeError,
    InputError,
    JudgmentError,
    MetricError,
    NotFoundError,
    NumericError,
    ParseError,
    TransportError,
    assign_color,
    balanced_accuracy,
    classify_quadrant,
    confidence,
    document_id,
    GRAPH_SCHEMA_VERSION,
)

__all__ = [
    "Auditor",
    "ClaimAuditError",
    "ConfigError",
    "ConsistencyError",
    "DecodeError",
    "InputError",
    "JudgmentError",
    "MetricError",
    "NotFoundError",
    "NumericError",
    "ParseError",
    "TransportError",
    "GRAPH_SCHEMA_VERSION",
    "assign_color",
    "balanced_accuracy",
    "classify_quadrant",
    "confidence",
    "document_id",
    "layout",
    "render_svg",
]


class Auditor:
    """Runs audits and evaluations against one provider set.

    Stub providers are used unless from_environment is set, in which case the
    AUDIT_* variables select remote endpoints and the cache directory.
    """

    def __init__(self, stub_config=None, cache_dir=None, from_environment=False):
        stub = json.dumps(stub_config) if isinstance(stub_config, dict) else stub_config
        self._impl = _core.Auditor(stub, None if cache_dir is None else str(cache_dir), from_environment)

    def audit(self, source, output, config=None):
        """Returns the graph document for one source/output pair."""
        return json.loads(self._impl.audit(source, output, json.dumps(config) if config else ""))

    def decompose(self, text, strategy="sici", radius=0, coref=True):
        return json.loads(self._impl.decompose(text, strategy, radius, coref))

    def evaluate(self, data_path, method, workers=1, subset=None):
        return json.loads(self._impl.evaluate(str(data_path), method, workers, subset))

    @property
    def invocations(self):
        return self._impl.invocations


def layout(graph):
    text = graph if isinstance(graph, str) else json.dumps(graph)
    return json.loads(_core.layout(text))


def render_svg(graph):
    return _core.render_svg(graph if isinstance(graph, str) else json.dumps(graph))
