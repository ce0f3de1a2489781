"""Test-script validation with instant, exhaustive diagnostics.

A script file holds one case plus its criteria (no identity block, so the
file stays shareable); a master script holds one or more named scenarios
plus an optional adaptive block. Validation never throws: every problem in
the file is reported at once, each tagged with a stable rule id.

Rules: V1 well-formed XML; V2 document structure (root element, exactly one
case and one criteria); V3 absolute http/https URL; V4 method GET or POST;
V5 message present iff POST; V6 criteria numeric and positive; V7 load and
adaptive bounds; V8 unknown elements (warning only). A scheme-less URL is
repaired to ``http://...`` and reported as V8, not V3.
"""

from __future__ import annotations

import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .errors import DomainError, InvalidScriptError
from .model import (
    AdaptiveParams,
    HttpMethod,
    LoadProfile,
    PerformanceCriteria,
    TestCase,
    check_absolute_url,
    normalize_url,
)

SCRIPT_NS = "urn:tfpaas:script:v1"

ERROR = "ERROR"
WARNING = "WARNING"

_RULE_IDS = frozenset(f"V{n}" for n in range(1, 9))
_INT_RE = re.compile(r"^[+-]?[0-9]+$")
_NS_PREFIX = "{" + SCRIPT_NS + "}"


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding; the rule id fixes the severity."""

    rule_id: str
    locator: str
    message: str
    severity: str = field(init=False)

    def __post_init__(self) -> None:
        if self.rule_id not in _RULE_IDS:
            raise DomainError(f"unknown rule id {self.rule_id!r}")
        object.__setattr__(
            self, "severity", WARNING if self.rule_id == "V8" else ERROR
        )

    def render(self) -> str:
        return f"{self.severity} {self.rule_id} {self.locator}: {self.message}"


@dataclass(frozen=True)
class TestScript:
    """The on-disk form of one critical test: what to hit and what counts
    as good. Identity is injected by the client at submission time."""

    case: TestCase
    criteria: PerformanceCriteria
    load: LoadProfile | None = None


@dataclass(frozen=True)
class MasterScenario:
    """One named workload inside a master suite."""

    name: str
    case: TestCase
    criteria: PerformanceCriteria
    load: LoadProfile | None = None
    adaptive: AdaptiveParams | None = None


@dataclass(frozen=True)
class MasterScript:
    scenarios: tuple[MasterScenario, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        if not self.scenarios:
            raise DomainError("master script requires at least one scenario")


# ---------------------------------------------------------------------------
# Low-level helpers


def _group(element: ET.Element, diags: list[Diagnostic], locator: str):
    groups: dict[str, list[ET.Element]] = {}
    for child in element:
        tag = child.tag
        if isinstance(tag, str) and tag.startswith(_NS_PREFIX):
            groups.setdefault(tag[len(_NS_PREFIX):], []).append(child)
        else:
            diags.append(Diagnostic("V8", locator, f"unknown element {tag!r}"))
    return groups


def _flag_unknown(
    groups: dict[str, list[ET.Element]],
    known: frozenset[str],
    diags: list[Diagnostic],
    locator: str,
) -> None:
    for name in sorted(set(groups) - known):
        diags.append(Diagnostic("V8", f"{locator}.{name}", "unknown element"))


def _stripped(element: ET.Element) -> str:
    return (element.text or "").strip()


_CASE_CHILDREN = frozenset({"url", "method", "message"})
_CRITERIA_CHILDREN = frozenset({"response", "tps", "bps"})
_LOAD_CHILDREN = frozenset({"requests", "concurrency"})
_ADAPTIVE_CHILDREN = frozenset(
    {"startConcurrency", "growthFactor", "maxIterations", "requestsPerIteration"}
)


def _check_case(
    el: ET.Element, locator: str, diags: list[Diagnostic]
) -> TestCase | None:
    groups = _group(el, diags, locator)
    _flag_unknown(groups, _CASE_CHILDREN, diags, locator)

    url: str | None = None
    url_els = groups.get("url", [])
    if len(url_els) != 1:
        diags.append(Diagnostic("V3", f"{locator}.url", "exactly one url required"))
    else:
        candidate, prefixed = normalize_url(_stripped(url_els[0]))
        if prefixed:
            diags.append(
                Diagnostic("V8", f"{locator}.url", f"missing scheme, assumed {candidate!r}")
            )
        reason = check_absolute_url(candidate)
        if reason:
            diags.append(Diagnostic("V3", f"{locator}.url", reason))
        else:
            url = candidate

    method: HttpMethod | None = None
    method_known = False
    method_els = groups.get("method", [])
    if len(method_els) != 1:
        diags.append(Diagnostic("V4", f"{locator}.method", "exactly one method required"))
    else:
        raw = _stripped(method_els[0])
        if raw.upper() in ("GET", "POST"):
            method = HttpMethod(raw.upper())
            method_known = True
        else:
            diags.append(
                Diagnostic("V4", f"{locator}.method", f"must be GET or POST, got {raw!r}")
            )

    message: str | None = None
    message_ok = True
    message_els = groups.get("message", [])
    if len(message_els) > 1:
        diags.append(Diagnostic("V5", f"{locator}.message", "at most one message allowed"))
        message_ok = False
    elif message_els:
        # Body text travels verbatim; strip nothing.
        message = message_els[0].text or ""
    # Presence rules only make sense once the method itself is valid.
    if method_known:
        if method is HttpMethod.GET and message_els:
            diags.append(Diagnostic("V5", f"{locator}.message", "not allowed for GET"))
            message_ok = False
        if method is HttpMethod.POST and not message_els:
            diags.append(Diagnostic("V5", f"{locator}.message", "required for POST"))
            message_ok = False

    if url is None or method is None or not message_ok:
        return None
    return TestCase(url=url, method=method, message=message)


def _check_criteria(
    el: ET.Element, locator: str, diags: list[Diagnostic]
) -> PerformanceCriteria | None:
    groups = _group(el, diags, locator)
    _flag_unknown(groups, _CRITERIA_CHILDREN, diags, locator)
    values: dict[str, float] = {}
    for name in ("response", "tps", "bps"):
        els = groups.get(name, [])
        if len(els) != 1:
            diags.append(Diagnostic("V6", f"{locator}.{name}", "exactly one required"))
            continue
        text = _stripped(els[0])
        try:
            value = float(text)
        except ValueError:
            diags.append(
                Diagnostic("V6", f"{locator}.{name}", f"not a number: {text!r}")
            )
            continue
        if not (math.isfinite(value) and value > 0):
            diags.append(Diagnostic("V6", f"{locator}.{name}", "must be > 0"))
            continue
        values[name] = value
    if len(values) != 3:
        return None
    return PerformanceCriteria(
        response_ms=values["response"], tps=values["tps"], bps=values["bps"]
    )


def _check_load(
    els: list[ET.Element], locator: str, diags: list[Diagnostic]
) -> LoadProfile | None:
    if not els:
        return None
    if len(els) > 1:
        diags.append(Diagnostic("V7", locator, "at most one load block allowed"))
        return None
    groups = _group(els[0], diags, locator)
    _flag_unknown(groups, _LOAD_CHILDREN, diags, locator)
    ints: dict[str, int] = {}
    for name in ("requests", "concurrency"):
        group = groups.get(name, [])
        if len(group) != 1:
            diags.append(Diagnostic("V7", f"{locator}.{name}", "exactly one required"))
            continue
        text = _stripped(group[0])
        if not _INT_RE.match(text):
            diags.append(
                Diagnostic("V7", f"{locator}.{name}", f"not an integer: {text!r}")
            )
            continue
        value = int(text)
        if value < 1:
            diags.append(Diagnostic("V7", f"{locator}.{name}", "must be >= 1"))
            continue
        ints[name] = value
    if len(ints) != 2:
        return None
    if ints["concurrency"] > ints["requests"]:
        diags.append(Diagnostic("V7", locator, "concurrency must not exceed requests"))
        return None
    return LoadProfile(requests=ints["requests"], concurrency=ints["concurrency"])


def _check_adaptive(
    els: list[ET.Element], locator: str, diags: list[Diagnostic]
) -> AdaptiveParams | None:
    if not els:
        return None
    if len(els) > 1:
        diags.append(Diagnostic("V7", locator, "at most one adaptive block allowed"))
        return None
    groups = _group(els[0], diags, locator)
    _flag_unknown(groups, _ADAPTIVE_CHILDREN, diags, locator)
    defaults = AdaptiveParams()
    values = {
        "startConcurrency": defaults.start_concurrency,
        "growthFactor": defaults.growth_factor,
        "maxIterations": defaults.max_iterations,
        "requestsPerIteration": defaults.requests_per_iteration,
    }
    ok = True
    for name in _ADAPTIVE_CHILDREN:
        group = groups.get(name, [])
        if not group:
            continue  # every knob is optional; defaults fill the gaps
        if len(group) > 1:
            diags.append(Diagnostic("V7", f"{locator}.{name}", "duplicated"))
            ok = False
            continue
        text = _stripped(group[0])
        if name == "growthFactor":
            try:
                growth = float(text)
            except ValueError:
                diags.append(
                    Diagnostic("V7", f"{locator}.{name}", f"not a number: {text!r}")
                )
                ok = False
                continue
            if not (math.isfinite(growth) and growth > 1.0):
                diags.append(Diagnostic("V7", f"{locator}.{name}", "must be > 1"))
                ok = False
                continue
            values[name] = growth
        else:
            if not _INT_RE.match(text):
                diags.append(
                    Diagnostic("V7", f"{locator}.{name}", f"not an integer: {text!r}")
                )
                ok = False
                continue
            value = int(text)
            if value < 1:
                diags.append(Diagnostic("V7", f"{locator}.{name}", "must be >= 1"))
                ok = False
                continue
            values[name] = value
    if not ok:
        return None
    return AdaptiveParams(
        start_concurrency=values["startConcurrency"],
        growth_factor=values["growthFactor"],
        max_iterations=values["maxIterations"],
        requests_per_iteration=values["requestsPerIteration"],
    )


# ---------------------------------------------------------------------------
# Critical scripts


def _analyze_script(text: str | bytes, diags: list[Diagnostic]) -> TestScript | None:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line = exc.position[0] if exc.position else "?"
        diags.append(Diagnostic("V1", f"line {line}", f"not well-formed XML: {exc}"))
        return None
    if root.tag != f"{_NS_PREFIX}testScript":
        diags.append(
            Diagnostic(
                "V2",
                "testScript",
                f"root must be tfp:testScript in namespace {SCRIPT_NS}",
            )
        )
        return None
    groups = _group(root, diags, "testScript")
    _flag_unknown(groups, frozenset({"case", "criteria", "load"}), diags, "testScript")

    case = criteria = None
    case_els = groups.get("case", [])
    if len(case_els) != 1:
        diags.append(Diagnostic("V2", "testScript.case", "exactly one case block required"))
    else:
        case = _check_case(case_els[0], "case", diags)
    criteria_els = groups.get("criteria", [])
    if len(criteria_els) != 1:
        diags.append(
            Diagnostic("V2", "testScript.criteria", "exactly one criteria block required")
        )
    else:
        criteria = _check_criteria(criteria_els[0], "criteria", diags)
    load = _check_load(groups.get("load", []), "load", diags)

    if any(d.severity == ERROR for d in diags):
        return None
    assert case is not None and criteria is not None
    return TestScript(case=case, criteria=criteria, load=load)


def validate_script(text: str | bytes) -> list[Diagnostic]:
    """All findings for one script, errors and warnings alike; empty means
    the text parses into a fully valid script."""
    diags: list[Diagnostic] = []
    _analyze_script(text, diags)
    return diags


def parse_script(text: str | bytes) -> tuple[TestScript, list[Diagnostic]]:
    """Parse a script that validates cleanly; warnings ride along.

    Raises InvalidScriptError carrying the full diagnostic list when any
    ERROR-severity rule fires.
    """
    diags: list[Diagnostic] = []
    script = _analyze_script(text, diags)
    if script is None:
        errors = sum(1 for d in diags if d.severity == ERROR)
        raise InvalidScriptError(f"{errors} validation error(s)", diagnostics=diags)
    return script, [d for d in diags if d.severity == WARNING]


# ---------------------------------------------------------------------------
# Master scripts


def _analyze_master(text: str | bytes, diags: list[Diagnostic]) -> MasterScript | None:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line = exc.position[0] if exc.position else "?"
        diags.append(Diagnostic("V1", f"line {line}", f"not well-formed XML: {exc}"))
        return None
    if root.tag != f"{_NS_PREFIX}masterScript":
        diags.append(
            Diagnostic(
                "V2",
                "masterScript",
                f"root must be tfp:masterScript in namespace {SCRIPT_NS}",
            )
        )
        return None
    groups = _group(root, diags, "masterScript")
    _flag_unknown(groups, frozenset({"scenario", "adaptive"}), diags, "masterScript")
    shared_adaptive = _check_adaptive(
        groups.get("adaptive", []), "masterScript.adaptive", diags
    )
    scenario_els = groups.get("scenario", [])
    if not scenario_els:
        diags.append(
            Diagnostic("V2", "masterScript.scenario", "at least one scenario required")
        )
        return None

    scenarios: list[MasterScenario] = []
    for index, scenario_el in enumerate(scenario_els, start=1):
        loc = f"scenario[{index}]"
        name = (scenario_el.get("name") or f"scenario-{index}").strip() or f"scenario-{index}"
        sub = _group(scenario_el, diags, loc)
        _flag_unknown(
            sub, frozenset({"case", "criteria", "load", "adaptive"}), diags, loc
        )
        case = criteria = None
        case_els = sub.get("case", [])
        if len(case_els) != 1:
            diags.append(Diagnostic("V2", f"{loc}.case", "exactly one case block required"))
        else:
            case = _check_case(case_els[0], f"{loc}.case", diags)
        criteria_els = sub.get("criteria", [])
        if len(criteria_els) != 1:
            diags.append(
                Diagnostic("V2", f"{loc}.criteria", "exactly one criteria block required")
            )
        else:
            criteria = _check_criteria(criteria_els[0], f"{loc}.criteria", diags)
        load = _check_load(sub.get("load", []), f"{loc}.load", diags)
        adaptive = _check_adaptive(sub.get("adaptive", []), f"{loc}.adaptive", diags)
        if case is not None and criteria is not None:
            scenarios.append(
                MasterScenario(
                    name=name,
                    case=case,
                    criteria=criteria,
                    load=load,
                    adaptive=adaptive if adaptive is not None else shared_adaptive,
                )
            )

    if any(d.severity == ERROR for d in diags):
        return None
    return MasterScript(scenarios=tuple(scenarios))


def validate_master_script(text: str | bytes) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    _analyze_master(text, diags)
    return diags


def parse_master_script(text: str | bytes) -> tuple[MasterScript, list[Diagnostic]]:
    diags: list[Diagnostic] = []
    script = _analyze_master(text, diags)
    if script is None:
        errors = sum(1 for d in diags if d.severity == ERROR)
        raise InvalidScriptError(f"{errors} validation error(s)", diagnostics=diags)
    return script, [d for d in diags if d.severity == WARNING]
