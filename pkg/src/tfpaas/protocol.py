"""Wire formats: submission and result envelopes are SOAP 1.2 documents,
run-center traffic is plain XML action documents.

Encoding is deterministic string building, so identical values yield
byte-identical documents. Decoding is strict on structure (missing or
duplicated required elements, invalid values) but ignores unknown elements
with a warning, and normalizes two things a hand-written document may get
wrong: a scheme-less URL gains ``http://`` and a lowercase method is
uppercased, both reported in the warning list.

Every decoder returns ``(value, warnings)``.
"""

from __future__ import annotations

import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import datetime
from decimal import Decimal
from xml.sax.saxutils import escape

from .errors import (
    FieldError,
    InvalidEnvelopeError,
    MalformedXmlError,
    SchemaError,
)
from .model import (
    AdaptiveOutcome,
    AdaptiveParams,
    ApplicationIdentity,
    CriterionResult,
    Decision,
    HttpMethod,
    LoadProfile,
    Measurement,
    MeasurementSummary,
    PerformanceCriteria,
    ResultStatus,
    TestCase,
    TestResultRecord,
    TestVerdict,
    TraceRecord,
    UUID_V4_RE,
    check_absolute_url,
    normalize_url,
)

SOAP_NS = "http://www.w3.org/2003/05/soap-envelope"
TFPS_NS = "urn:tfpaas:tfps:v1"
RUNCENTER_NS = "urn:tfpaas:runcenter:v1"

SOAP_CONTENT_TYPE = "application/soap+xml; charset=utf-8"
XML_CONTENT_TYPE = "application/xml"

_XML_DECL = '<?xml version="1.0" encoding="UTF-8"?>\n'
_INT_RE = re.compile(r"^[+-]?[0-9]+$")


# ---------------------------------------------------------------------------
# Envelope value types


@dataclass(frozen=True)
class TestEnvelope:
    """One submission: who is asking, what to hit, and what counts as good.

    ``mode`` is ``critical`` (synchronous, instant feedback) or ``master``
    (asynchronous, adaptively executed); ``adaptive`` overrides are only
    meaningful for master runs.
    """

    application: ApplicationIdentity
    case: TestCase
    criteria: PerformanceCriteria
    load: LoadProfile | None = None
    mode: str = "critical"
    adaptive: AdaptiveParams | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("critical", "master"):
            raise FieldError("mode", "must be 'critical' or 'master'")
        if self.adaptive is not None and self.mode != "master":
            raise FieldError("adaptive", "only allowed in master mode")


@dataclass(frozen=True)
class ResultEnvelope:
    """What the service reports back for one task."""

    task_id: str
    status: ResultStatus
    detail_url: str
    verdict: TestVerdict | None = None
    summary: MeasurementSummary | None = None
    error: str | None = None

    def __post_init__(self) -> None:
        if not UUID_V4_RE.match(self.task_id):
            raise FieldError("taskId", "must be a canonical lowercase v4 UUID")
        done = self.status is ResultStatus.DONE
        if done and (self.verdict is None or self.summary is None):
            raise FieldError("status", "DONE requires verdict and summary")
        if not done and (self.verdict is not None or self.summary is not None):
            raise FieldError("status", f"{self.status.value} forbids verdict and summary")


@dataclass(frozen=True)
class InstructionSet:
    """Parsed, executable form of an envelope; the service assigns the task
    id exactly once on receipt."""

    task_id: str
    identity: ApplicationIdentity
    case: TestCase
    criteria: PerformanceCriteria
    profile: LoadProfile
    adaptive: AdaptiveParams | None = None

    def __post_init__(self) -> None:
        if not UUID_V4_RE.match(self.task_id):
            raise FieldError("taskId", "must be a canonical lowercase v4 UUID")


# ---------------------------------------------------------------------------
# Primitive formatting / parsing


def format_number(value: float | int) -> str:
    """Render a number in plain decimal, never exponent notation."""
    if isinstance(value, bool):
        raise FieldError("number", "booleans are not numbers")
    if isinstance(value, int):
        return str(value)
    if not math.isfinite(value):
        raise FieldError("number", f"not finite: {value!r}")
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    text = repr(value)
    if "e" in text or "E" in text:
        text = format(Decimal(text), "f")
    return text


def _fmt_bool(value: bool) -> str:
    return "true" if value else "false"


def _parse_float(field: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise FieldError(field, f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise FieldError(field, "must be finite")
    return value


def _parse_positive(field: str, text: str) -> float:
    value = _parse_float(field, text)
    if value <= 0:
        raise FieldError(field, "must be > 0")
    return value


def _parse_int(field: str, text: str) -> int:
    if not _INT_RE.match(text):
        raise FieldError(field, f"not an integer: {text!r}")
    return int(text)


def _parse_bool(field: str, text: str) -> bool:
    if text == "true":
        return True
    if text == "false":
        return False
    raise FieldError(field, f"must be 'true' or 'false', got {text!r}")


def _parse_datetime(field: str, text: str) -> datetime:
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        raise FieldError(field, f"not an ISO-8601 timestamp: {text!r}") from None


def _text(element: ET.Element) -> str:
    return (element.text or "").strip()


# ---------------------------------------------------------------------------
# XML plumbing


def _parse_xml(xml: str | bytes) -> ET.Element:
    try:
        return ET.fromstring(xml)
    except ET.ParseError as exc:
        raise MalformedXmlError(str(exc)) from exc


class _Reader:
    """Children of one element, grouped by local name within one namespace.

    Unknown children become warnings; missing or duplicated required ones
    are collected and raised together as a schema error naming each
    offender.
    """

    def __init__(
        self, element: ET.Element, ns: str, context: str, warnings: list[str]
    ) -> None:
        self._groups: dict[str, list[ET.Element]] = {}
        self._context = context
        self._warnings = warnings
        self._offenders: list[str] = []
        prefix = "{" + ns + "}"
        for child in element:
            tag = child.tag
            if isinstance(tag, str) and tag.startswith(prefix):
                self._groups.setdefault(tag[len(prefix):], []).append(child)
            else:
                warnings.append(f"ignored unknown element {tag!r} in {context}")
        self._unclaimed = set(self._groups)

    def require(self, name: str) -> ET.Element | None:
        self._unclaimed.discard(name)
        group = self._groups.get(name, [])
        if len(group) != 1:
            self._offenders.append(name)
            return None
        return group[0]

    def optional(self, name: str) -> ET.Element | None:
        self._unclaimed.discard(name)
        group = self._groups.get(name, [])
        if len(group) > 1:
            self._offenders.append(name)
            return None
        return group[0] if group else None

    def all(self, name: str) -> list[ET.Element]:
        self._unclaimed.discard(name)
        return self._groups.get(name, [])

    def finish(self) -> None:
        for name in sorted(self._unclaimed):
            self._warnings.append(
                f"ignored unknown element '{name}' in {self._context}"
            )
        if self._offenders:
            raise SchemaError(
                f"missing or duplicated element(s) in {self._context}: "
                + ", ".join(self._offenders),
                offenders=self._offenders,
            )


def _soap_document(payload_xml: str) -> str:
    return (
        _XML_DECL
        + f'<soap:Envelope xmlns:soap="{SOAP_NS}">'
        + "<soap:Header></soap:Header>"
        + f"<soap:Body>{payload_xml}</soap:Body>"
        + "</soap:Envelope>"
    )


def _soap_payload(xml: str | bytes, local_name: str) -> ET.Element:
    root = _parse_xml(xml)
    if root.tag != f"{{{SOAP_NS}}}Envelope":
        raise SchemaError("root must be a SOAP 1.2 Envelope", offenders=["Envelope"])
    bodies = [child for child in root if child.tag == f"{{{SOAP_NS}}}Body"]
    if len(bodies) != 1:
        raise SchemaError("exactly one soap:Body required", offenders=["Body"])
    payloads = [
        child for child in bodies[0] if child.tag == f"{{{TFPS_NS}}}{local_name}"
    ]
    if len(payloads) != 1:
        raise SchemaError(
            f"exactly one {local_name} element required in soap:Body",
            offenders=[local_name],
        )
    return payloads[0]


# ---------------------------------------------------------------------------
# Shared fragment builders (prefix differs between the two namespaces)


def _leaf(p: str, name: str, text: str) -> str:
    return f"<{p}:{name}>{escape(text)}</{p}:{name}>"


def _application_xml(p: str, identity: ApplicationIdentity) -> str:
    return (
        f"<{p}:application>"
        + _leaf(p, "appId", identity.app_id)
        + _leaf(p, "userName", identity.user_name)
        + f"</{p}:application>"
    )


def _case_xml(p: str, case: TestCase) -> str:
    parts = [_leaf(p, "url", case.url), _leaf(p, "method", case.method.value)]
    if case.message is not None:
        parts.append(_leaf(p, "message", case.message))
    return f"<{p}:case>" + "".join(parts) + f"</{p}:case>"


def _criteria_xml(p: str, criteria: PerformanceCriteria) -> str:
    return (
        f"<{p}:criteria>"
        + _leaf(p, "response", format_number(criteria.response_ms))
        + _leaf(p, "tps", format_number(criteria.tps))
        + _leaf(p, "bps", format_number(criteria.bps))
        + f"</{p}:criteria>"
    )


def _profile_xml(p: str, profile: LoadProfile) -> str:
    return (
        f"<{p}:profile>"
        + _leaf(p, "requests", str(profile.requests))
        + _leaf(p, "concurrency", str(profile.concurrency))
        + f"</{p}:profile>"
    )


def _load_xml(p: str, profile: LoadProfile) -> str:
    return (
        f"<{p}:load>"
        + _leaf(p, "requests", str(profile.requests))
        + _leaf(p, "concurrency", str(profile.concurrency))
        + f"</{p}:load>"
    )


def _adaptive_xml(p: str, params: AdaptiveParams) -> str:
    return (
        f"<{p}:adaptive>"
        + _leaf(p, "startConcurrency", str(params.start_concurrency))
        + _leaf(p, "growthFactor", format_number(params.growth_factor))
        + _leaf(p, "maxIterations", str(params.max_iterations))
        + _leaf(p, "requestsPerIteration", str(params.requests_per_iteration))
        + f"</{p}:adaptive>"
    )


def _summary_xml(p: str, name: str, summary: MeasurementSummary) -> str:
    return (
        f"<{p}:{name}>"
        + _leaf(p, "mean", format_number(summary.mean_ms))
        + _leaf(p, "p50", format_number(summary.p50_ms))
        + _leaf(p, "p95", format_number(summary.p95_ms))
        + _leaf(p, "tps", format_number(summary.observed_tps))
        + _leaf(p, "bps", format_number(summary.observed_bps))
        + _leaf(p, "completed", str(summary.completed))
        + _leaf(p, "errored", str(summary.errored))
        + f"</{p}:{name}>"
    )


def _criterion_xml(p: str, criterion: CriterionResult) -> str:
    return (
        f"<{p}:criterion>"
        + _leaf(p, "name", criterion.name)
        + _leaf(p, "expected", format_number(criterion.expected))
        + _leaf(p, "observed", format_number(criterion.observed))
        + _leaf(p, "pass", _fmt_bool(criterion.passed))
        + f"</{p}:criterion>"
    )


def _verdict_xml(p: str, verdict: TestVerdict) -> str:
    return (
        f"<{p}:verdict>"
        + _criterion_xml(p, verdict.response)
        + _criterion_xml(p, verdict.tps)
        + _criterion_xml(p, verdict.bps)
        + _leaf(p, "overall", _fmt_bool(verdict.overall))
        + f"</{p}:verdict>"
    )


def _traces_xml(p: str, traces: tuple[TraceRecord, ...]) -> str:
    rows = []
    for trace in traces:
        rows.append(
            f"<{p}:trace>"
            + _leaf(p, "iteration", str(trace.iteration))
            + _leaf(p, "concurrency", str(trace.concurrency))
            + _summary_xml(p, "summary", trace.summary)
            + _leaf(p, "decision", trace.decision.value)
            + f"</{p}:trace>"
        )
    return f"<{p}:traces>" + "".join(rows) + f"</{p}:traces>"


# ---------------------------------------------------------------------------
# Shared fragment decoders


def _decode_application(
    el: ET.Element, ns: str, warnings: list[str]
) -> ApplicationIdentity:
    r = _Reader(el, ns, "application", warnings)
    app_id_el = r.require("appId")
    user_el = r.require("userName")
    r.finish()
    try:
        return ApplicationIdentity(app_id=_text(app_id_el), user_name=_text(user_el))
    except FieldError as exc:
        wire = {"app_id": "appId", "user_name": "userName"}.get(exc.field, exc.field)
        raise FieldError(wire, exc.message) from exc


def _decode_case(el: ET.Element, ns: str, warnings: list[str]) -> TestCase:
    r = _Reader(el, ns, "case", warnings)
    url_el = r.require("url")
    method_el = r.require("method")
    message_el = r.optional("message")
    r.finish()
    url, prefixed = normalize_url(_text(url_el))
    if prefixed:
        warnings.append(f"case.url: missing scheme, assumed {url!r}")
    reason = check_absolute_url(url)
    if reason:
        raise FieldError("url", reason)
    raw_method = _text(method_el)
    method_text = raw_method.upper()
    if method_text not in (m.value for m in HttpMethod):
        raise FieldError("method", f"must be GET or POST, got {raw_method!r}")
    if raw_method != method_text:
        warnings.append(f"case.method: canonicalized {raw_method!r} to {method_text!r}")
    message = None if message_el is None else (message_el.text or "")
    return TestCase(url=url, method=HttpMethod(method_text), message=message)


def _decode_criteria(
    el: ET.Element, ns: str, warnings: list[str]
) -> PerformanceCriteria:
    r = _Reader(el, ns, "criteria", warnings)
    response_el = r.require("response")
    tps_el = r.require("tps")
    bps_el = r.require("bps")
    r.finish()
    return PerformanceCriteria(
        response_ms=_parse_positive("response", _text(response_el)),
        tps=_parse_positive("tps", _text(tps_el)),
        bps=_parse_positive("bps", _text(bps_el)),
    )


def _decode_profile(
    el: ET.Element, ns: str, warnings: list[str], context: str
) -> LoadProfile:
    r = _Reader(el, ns, context, warnings)
    requests_el = r.require("requests")
    concurrency_el = r.require("concurrency")
    r.finish()
    return LoadProfile(
        requests=_parse_int("requests", _text(requests_el)),
        concurrency=_parse_int("concurrency", _text(concurrency_el)),
    )


def _decode_adaptive(el: ET.Element, ns: str, warnings: list[str]) -> AdaptiveParams:
    r = _Reader(el, ns, "adaptive", warnings)
    start_el = r.require("startConcurrency")
    growth_el = r.require("growthFactor")
    iters_el = r.require("maxIterations")
    rpi_el = r.require("requestsPerIteration")
    r.finish()
    growth = _parse_float("growthFactor", _text(growth_el))
    return AdaptiveParams(
        start_concurrency=_parse_int("startConcurrency", _text(start_el)),
        growth_factor=growth,
        max_iterations=_parse_int("maxIterations", _text(iters_el)),
        requests_per_iteration=_parse_int("requestsPerIteration", _text(rpi_el)),
    )


def _decode_summary(
    el: ET.Element, ns: str, warnings: list[str], context: str
) -> MeasurementSummary:
    r = _Reader(el, ns, context, warnings)
    mean_el = r.require("mean")
    p50_el = r.require("p50")
    p95_el = r.require("p95")
    tps_el = r.require("tps")
    bps_el = r.require("bps")
    completed_el = r.require("completed")
    errored_el = r.require("errored")
    r.finish()
    return MeasurementSummary(
        mean_ms=_parse_float("mean", _text(mean_el)),
        p50_ms=_parse_float("p50", _text(p50_el)),
        p95_ms=_parse_float("p95", _text(p95_el)),
        observed_tps=_parse_float("tps", _text(tps_el)),
        observed_bps=_parse_float("bps", _text(bps_el)),
        completed=_parse_int("completed", _text(completed_el)),
        errored=_parse_int("errored", _text(errored_el)),
    )


def _decode_verdict(el: ET.Element, ns: str, warnings: list[str]) -> TestVerdict:
    r = _Reader(el, ns, "verdict", warnings)
    criterion_els = r.all("criterion")
    overall_el = r.require("overall")
    r.finish()
    if len(criterion_els) != 3:
        raise SchemaError(
            f"verdict requires exactly 3 criterion elements, got {len(criterion_els)}",
            offenders=["criterion"],
        )
    by_name: dict[str, CriterionResult] = {}
    for criterion_el in criterion_els:
        cr = _Reader(criterion_el, ns, "criterion", warnings)
        name_el = cr.require("name")
        expected_el = cr.require("expected")
        observed_el = cr.require("observed")
        pass_el = cr.require("pass")
        cr.finish()
        name = _text(name_el)
        if name not in ("response", "tps", "bps"):
            raise FieldError("name", f"unknown criterion {name!r}")
        if name in by_name:
            raise SchemaError(f"duplicated criterion {name!r}", offenders=[name])
        by_name[name] = CriterionResult(
            name=name,
            expected=_parse_float("expected", _text(expected_el)),
            observed=_parse_float("observed", _text(observed_el)),
            passed=_parse_bool("pass", _text(pass_el)),
        )
    missing = [n for n in ("response", "tps", "bps") if n not in by_name]
    if missing:
        raise SchemaError("missing criterion(s): " + ", ".join(missing), offenders=missing)
    overall = _parse_bool("overall", _text(overall_el))
    expected_overall = all(c.passed for c in by_name.values())
    if overall != expected_overall:
        raise FieldError("overall", "inconsistent with the three pass flags")
    return TestVerdict(
        response=by_name["response"], tps=by_name["tps"], bps=by_name["bps"],
        overall=overall,
    )


def _decode_traces(
    el: ET.Element, ns: str, warnings: list[str]
) -> tuple[TraceRecord, ...]:
    r = _Reader(el, ns, "traces", warnings)
    trace_els = r.all("trace")
    r.finish()
    traces = []
    for trace_el in trace_els:
        tr = _Reader(trace_el, ns, "trace", warnings)
        iteration_el = tr.require("iteration")
        concurrency_el = tr.require("concurrency")
        summary_el = tr.require("summary")
        decision_el = tr.require("decision")
        tr.finish()
        decision_text = _text(decision_el)
        try:
            decision = Decision(decision_text)
        except ValueError:
            raise FieldError("decision", f"unknown decision {decision_text!r}") from None
        traces.append(
            TraceRecord(
                iteration=_parse_int("iteration", _text(iteration_el)),
                concurrency=_parse_int("concurrency", _text(concurrency_el)),
                summary=_decode_summary(summary_el, ns, warnings, "trace.summary"),
                decision=decision,
            )
        )
    return tuple(traces)


# ---------------------------------------------------------------------------
# Submission envelope


def encode_request(envelope: TestEnvelope) -> str:
    """Encode a submission as a SOAP 1.2 document.

    Child order is fixed: application, case, criteria, then the optional
    mode marker and adaptive block, with the optional load block last.
    """
    _revalidate_envelope(envelope)
    p = "m"
    parts = [
        _application_xml(p, envelope.application),
        _case_xml(p, envelope.case),
        _criteria_xml(p, envelope.criteria),
    ]
    if envelope.mode != "critical":
        parts.append(_leaf(p, "mode", envelope.mode))
    if envelope.adaptive is not None:
        parts.append(_adaptive_xml(p, envelope.adaptive))
    if envelope.load is not None:
        parts.append(_load_xml(p, envelope.load))
    payload = (
        f'<m:TFPService xmlns:m="{TFPS_NS}">' + "".join(parts) + "</m:TFPService>"
    )
    return _soap_document(payload)


def _revalidate_envelope(envelope: TestEnvelope) -> None:
    # Frozen dataclasses validate at construction, but an envelope can still
    # be forged around __post_init__; re-run the checks so the encoder never
    # emits a document its own decoder would reject.
    try:
        ApplicationIdentity(envelope.application.app_id, envelope.application.user_name)
        TestCase(envelope.case.url, envelope.case.method, envelope.case.message)
        PerformanceCriteria(
            envelope.criteria.response_ms, envelope.criteria.tps, envelope.criteria.bps
        )
        if envelope.load is not None:
            LoadProfile(envelope.load.requests, envelope.load.concurrency)
        if envelope.adaptive is not None:
            AdaptiveParams(
                envelope.adaptive.start_concurrency,
                envelope.adaptive.growth_factor,
                envelope.adaptive.max_iterations,
                envelope.adaptive.requests_per_iteration,
            )
        if envelope.mode not in ("critical", "master"):
            raise FieldError("mode", "must be 'critical' or 'master'")
        if envelope.adaptive is not None and envelope.mode != "master":
            raise FieldError("adaptive", "only allowed in master mode")
    except FieldError as exc:
        raise InvalidEnvelopeError(str(exc)) from exc


def decode_request(xml: str | bytes) -> tuple[TestEnvelope, list[str]]:
    """Decode a submission document; returns the envelope and any warnings."""
    warnings: list[str] = []
    payload = _soap_payload(xml, "TFPService")
    r = _Reader(payload, TFPS_NS, "TFPService", warnings)
    application_el = r.require("application")
    case_el = r.require("case")
    criteria_el = r.require("criteria")
    load_el = r.optional("load")
    mode_el = r.optional("mode")
    adaptive_el = r.optional("adaptive")
    r.finish()

    mode = "critical" if mode_el is None else _text(mode_el)
    if mode not in ("critical", "master"):
        raise FieldError("mode", f"must be 'critical' or 'master', got {mode!r}")
    envelope = TestEnvelope(
        application=_decode_application(application_el, TFPS_NS, warnings),
        case=_decode_case(case_el, TFPS_NS, warnings),
        criteria=_decode_criteria(criteria_el, TFPS_NS, warnings),
        load=(
            None
            if load_el is None
            else _decode_profile(load_el, TFPS_NS, warnings, "load")
        ),
        mode=mode,
        adaptive=(
            None
            if adaptive_el is None
            else _decode_adaptive(adaptive_el, TFPS_NS, warnings)
        ),
    )
    return envelope, warnings


# ---------------------------------------------------------------------------
# Result envelope


def encode_result(result: ResultEnvelope) -> str:
    p = "m"
    parts = [
        _leaf(p, "taskId", result.task_id),
        _leaf(p, "status", result.status.value),
        _leaf(p, "detailUrl", result.detail_url),
    ]
    if result.error is not None:
        parts.append(_leaf(p, "error", result.error))
    if result.verdict is not None:
        parts.append(_verdict_xml(p, result.verdict))
    if result.summary is not None:
        parts.append(_summary_xml(p, "summary", result.summary))
    payload = (
        f'<m:TFPServiceResult xmlns:m="{TFPS_NS}">'
        + "".join(parts)
        + "</m:TFPServiceResult>"
    )
    return _soap_document(payload)


def _decode_status(text: str) -> ResultStatus:
    try:
        return ResultStatus(text)
    except ValueError:
        raise FieldError("status", f"unknown status {text!r}") from None


def decode_result(xml: str | bytes) -> tuple[ResultEnvelope, list[str]]:
    warnings: list[str] = []
    payload = _soap_payload(xml, "TFPServiceResult")
    r = _Reader(payload, TFPS_NS, "TFPServiceResult", warnings)
    task_el = r.require("taskId")
    status_el = r.require("status")
    detail_el = r.require("detailUrl")
    error_el = r.optional("error")
    verdict_el = r.optional("verdict")
    summary_el = r.optional("summary")
    r.finish()

    status = _decode_status(_text(status_el))
    if status is ResultStatus.DONE:
        if verdict_el is None or summary_el is None:
            raise SchemaError(
                "DONE result requires verdict and summary",
                offenders=[n for n, e in (("verdict", verdict_el), ("summary", summary_el)) if e is None],
            )
    elif verdict_el is not None or summary_el is not None:
        raise SchemaError(
            f"{status.value} result forbids verdict and summary",
            offenders=[n for n, e in (("verdict", verdict_el), ("summary", summary_el)) if e is not None],
        )
    envelope = ResultEnvelope(
        task_id=_text(task_el),
        status=status,
        detail_url=_text(detail_el),
        verdict=(
            None if verdict_el is None else _decode_verdict(verdict_el, TFPS_NS, warnings)
        ),
        summary=(
            None
            if summary_el is None
            else _decode_summary(summary_el, TFPS_NS, warnings, "summary")
        ),
        error=None if error_el is None else _text(error_el),
    )
    return envelope, warnings


# ---------------------------------------------------------------------------
# Stored result record (the result envelope plus request echo and traces)


def encode_record(record: TestResultRecord) -> str:
    p = "m"
    parts = [
        _leaf(p, "taskId", record.task_id),
        _leaf(p, "status", record.status.value),
        _leaf(p, "detailUrl", record.detail_url),
    ]
    if record.error is not None:
        parts.append(_leaf(p, "error", record.error))
    parts.append(_leaf(p, "mode", record.mode))
    parts.append(_application_xml(p, record.identity))
    parts.append(_case_xml(p, record.case))
    parts.append(_criteria_xml(p, record.criteria))
    parts.append(_profile_xml(p, record.profile))
    if record.verdict is not None:
        parts.append(_verdict_xml(p, record.verdict))
    if record.summary is not None:
        parts.append(_summary_xml(p, "summary", record.summary))
    if record.traces:
        parts.append(_traces_xml(p, record.traces))
    if record.finished_at is not None:
        parts.append(_leaf(p, "finishedAt", record.finished_at.isoformat()))
    payload = (
        f'<m:TFPServiceResult xmlns:m="{TFPS_NS}">'
        + "".join(parts)
        + "</m:TFPServiceResult>"
    )
    return _soap_document(payload)


def decode_record(xml: str | bytes) -> tuple[TestResultRecord, list[str]]:
    warnings: list[str] = []
    payload = _soap_payload(xml, "TFPServiceResult")
    r = _Reader(payload, TFPS_NS, "TFPServiceResult", warnings)
    task_el = r.require("taskId")
    status_el = r.require("status")
    detail_el = r.require("detailUrl")
    error_el = r.optional("error")
    mode_el = r.require("mode")
    application_el = r.require("application")
    case_el = r.require("case")
    criteria_el = r.require("criteria")
    profile_el = r.require("profile")
    verdict_el = r.optional("verdict")
    summary_el = r.optional("summary")
    traces_el = r.optional("traces")
    finished_el = r.optional("finishedAt")
    r.finish()

    record = TestResultRecord(
        task_id=_text(task_el),
        identity=_decode_application(application_el, TFPS_NS, warnings),
        case=_decode_case(case_el, TFPS_NS, warnings),
        criteria=_decode_criteria(criteria_el, TFPS_NS, warnings),
        profile=_decode_profile(profile_el, TFPS_NS, warnings, "profile"),
        status=_decode_status(_text(status_el)),
        detail_url=_text(detail_el),
        mode=_text(mode_el),
        summary=(
            None
            if summary_el is None
            else _decode_summary(summary_el, TFPS_NS, warnings, "summary")
        ),
        verdict=(
            None if verdict_el is None else _decode_verdict(verdict_el, TFPS_NS, warnings)
        ),
        traces=(
            () if traces_el is None else _decode_traces(traces_el, TFPS_NS, warnings)
        ),
        finished_at=(
            None if finished_el is None else _parse_datetime("finishedAt", _text(finished_el))
        ),
        error=None if error_el is None else _text(error_el),
    )
    return record, warnings


# ---------------------------------------------------------------------------
# Run-center instruction document


def encode_instructions(instructions: InstructionSet) -> str:
    p = "tfp"
    parts = [
        _leaf(p, "taskId", instructions.task_id),
        _application_xml(p, instructions.identity),
        _case_xml(p, instructions.case),
        _criteria_xml(p, instructions.criteria),
        _profile_xml(p, instructions.profile),
    ]
    if instructions.adaptive is not None:
        parts.append(_adaptive_xml(p, instructions.adaptive))
    return (
        _XML_DECL
        + f'<tfp:instructionSet xmlns:tfp="{RUNCENTER_NS}" action="EXECUTE">'
        + "".join(parts)
        + "</tfp:instructionSet>"
    )


def decode_instructions(xml: str | bytes) -> tuple[InstructionSet, list[str]]:
    warnings: list[str] = []
    root = _parse_xml(xml)
    if root.tag != f"{{{RUNCENTER_NS}}}instructionSet":
        raise SchemaError("root must be tfp:instructionSet", offenders=["instructionSet"])
    action = root.get("action")
    if action != "EXECUTE":
        raise FieldError("action", f"must be EXECUTE, got {action!r}")
    r = _Reader(root, RUNCENTER_NS, "instructionSet", warnings)
    task_el = r.require("taskId")
    application_el = r.require("application")
    case_el = r.require("case")
    criteria_el = r.require("criteria")
    profile_el = r.require("profile")
    adaptive_el = r.optional("adaptive")
    r.finish()
    instructions = InstructionSet(
        task_id=_text(task_el),
        identity=_decode_application(application_el, RUNCENTER_NS, warnings),
        case=_decode_case(case_el, RUNCENTER_NS, warnings),
        criteria=_decode_criteria(criteria_el, RUNCENTER_NS, warnings),
        profile=_decode_profile(profile_el, RUNCENTER_NS, warnings, "profile"),
        adaptive=(
            None
            if adaptive_el is None
            else _decode_adaptive(adaptive_el, RUNCENTER_NS, warnings)
        ),
    )
    return instructions, warnings


# ---------------------------------------------------------------------------
# Run-center reply documents


def encode_measurement(measurement: Measurement) -> str:
    p = "tfp"
    latencies = " ".join(format_number(x) for x in measurement.latencies_ms)
    return (
        _XML_DECL
        + f'<tfp:measurement xmlns:tfp="{RUNCENTER_NS}" action="RESULT">'
        + _leaf(p, "startedAt", measurement.started_at.isoformat())
        + _leaf(p, "wallTimeS", format_number(measurement.wall_time_s))
        + _leaf(p, "bytesReceived", str(measurement.bytes_received))
        + _leaf(p, "transportErrors", str(measurement.error_count))
        + _leaf(p, "httpErrors", str(measurement.http_error_count))
        + _leaf(p, "latenciesMs", latencies)
        + "</tfp:measurement>"
    )


def decode_measurement(xml: str | bytes) -> tuple[Measurement, list[str]]:
    warnings: list[str] = []
    root = _parse_xml(xml)
    if root.tag != f"{{{RUNCENTER_NS}}}measurement":
        raise SchemaError("root must be tfp:measurement", offenders=["measurement"])
    action = root.get("action")
    if action != "RESULT":
        raise FieldError("action", f"must be RESULT, got {action!r}")
    r = _Reader(root, RUNCENTER_NS, "measurement", warnings)
    started_el = r.require("startedAt")
    wall_el = r.require("wallTimeS")
    bytes_el = r.require("bytesReceived")
    transport_el = r.require("transportErrors")
    http_el = r.require("httpErrors")
    latencies_el = r.require("latenciesMs")
    r.finish()
    latencies = tuple(
        _parse_float("latenciesMs", token) for token in _text(latencies_el).split()
    )
    measurement = Measurement(
        latencies_ms=latencies,
        bytes_received=_parse_int("bytesReceived", _text(bytes_el)),
        wall_time_s=_parse_float("wallTimeS", _text(wall_el)),
        error_count=_parse_int("transportErrors", _text(transport_el)),
        started_at=_parse_datetime("startedAt", _text(started_el)),
        http_error_count=_parse_int("httpErrors", _text(http_el)),
    )
    return measurement, warnings


def encode_outcome(outcome: AdaptiveOutcome) -> str:
    p = "tfp"
    return (
        _XML_DECL
        + f'<tfp:outcome xmlns:tfp="{RUNCENTER_NS}" action="RESULT">'
        + _leaf(p, "maxSustainableConcurrency", str(outcome.max_sustainable_concurrency))
        + _leaf(p, "complete", _fmt_bool(outcome.complete))
        + _summary_xml(p, "finalSummary", outcome.final_summary)
        + _traces_xml(p, outcome.traces)
        + "</tfp:outcome>"
    )


def decode_outcome(xml: str | bytes) -> tuple[AdaptiveOutcome, list[str]]:
    warnings: list[str] = []
    root = _parse_xml(xml)
    if root.tag != f"{{{RUNCENTER_NS}}}outcome":
        raise SchemaError("root must be tfp:outcome", offenders=["outcome"])
    action = root.get("action")
    if action != "RESULT":
        raise FieldError("action", f"must be RESULT, got {action!r}")
    r = _Reader(root, RUNCENTER_NS, "outcome", warnings)
    max_el = r.require("maxSustainableConcurrency")
    complete_el = r.require("complete")
    final_el = r.require("finalSummary")
    traces_el = r.require("traces")
    r.finish()
    outcome = AdaptiveOutcome(
        traces=_decode_traces(traces_el, RUNCENTER_NS, warnings),
        max_sustainable_concurrency=_parse_int(
            "maxSustainableConcurrency", _text(max_el)
        ),
        final_summary=_decode_summary(final_el, RUNCENTER_NS, warnings, "finalSummary"),
        complete=_parse_bool("complete", _text(complete_el)),
    )
    return outcome, warnings


def encode_status_document() -> str:
    """Liveness reply for the run center's status endpoint."""
    return (
        _XML_DECL
        + f'<tfp:status xmlns:tfp="{RUNCENTER_NS}" action="STATUS">'
        + "<tfp:ok>true</tfp:ok>"
        + "</tfp:status>"
    )
