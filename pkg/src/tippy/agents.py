"""Agent runtime primitives: safety guardrail, supervisor routing, dynamic
handoffs, the versioned session blackboard, collaborative decisions, and the
pluggable policy providers that animate each agent.
"""

from __future__ import annotations

import json
import re
import urllib.request
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Protocol


class AgentRole(str, Enum):
    SUPERVISOR = "Supervisor"
    MOLECULE = "Molecule"
    LAB = "Lab"
    ANALYSIS = "Analysis"
    REPORT = "Report"
    SAFETY_GUARDRAIL = "SafetyGuardrail"


SAFETY_CATEGORIES = (
    "dangerous_reaction",
    "unauthorized_access",
    "harm",
    "controlled_substance",
)

DEFAULT_RULES_PATH = Path(__file__).parent / "data" / "guardrail_rules.json"


class RuleFileInvalid(ValueError):
    pass


class SelfHandoff(ValueError):
    pass


class VersionConflict(ValueError):
    pass


class EmptyCandidates(ValueError):
    pass


class MissingScore(ValueError):
    pass


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class SafetyVerdict:
    decision: str  # "Allow" | "Deny"
    category: str | None = None
    matched_rule: str | None = None

    def __post_init__(self):
        if self.decision not in ("Allow", "Deny"):
            raise ValueError(f"bad decision {self.decision!r}")
        if self.decision == "Deny" and (self.category is None or self.matched_rule is None):
            raise ValueError("Deny verdict requires category and matched_rule")

    @property
    def allowed(self) -> bool:
        return self.decision == "Allow"


@dataclass(frozen=True)
class GuardrailRule:
    id: str
    category: str
    pattern: str  # "keyword" | "regex"
    value: str


class GuardrailRules:
    """Ordered deny rules, validated at load time. First match wins."""

    def __init__(self, rules: list[GuardrailRule]):
        seen_ids: set[str] = set()
        compiled: list[tuple[GuardrailRule, re.Pattern]] = []
        for rule in rules:
            if rule.id in seen_ids:
                raise RuleFileInvalid(f"duplicate rule id {rule.id!r}")
            seen_ids.add(rule.id)
            if rule.category not in SAFETY_CATEGORIES:
                raise RuleFileInvalid(f"rule {rule.id!r}: unknown category {rule.category!r}")
            if not rule.value:
                raise RuleFileInvalid(f"rule {rule.id!r}: empty value")
            if rule.pattern == "keyword":
                compiled.append((rule, re.compile(re.escape(rule.value), re.IGNORECASE)))
            elif rule.pattern == "regex":
                try:
                    compiled.append((rule, re.compile(rule.value, re.IGNORECASE)))
                except re.error as exc:
                    raise RuleFileInvalid(f"rule {rule.id!r}: bad regex: {exc}") from exc
            else:
                raise RuleFileInvalid(f"rule {rule.id!r}: unknown pattern {rule.pattern!r}")
        self._compiled = compiled

    @classmethod
    def from_file(cls, path: str | Path) -> "GuardrailRules":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise RuleFileInvalid(f"cannot load rule file {path}: {exc}") from exc
        if not isinstance(raw, list):
            raise RuleFileInvalid("rule file must be a JSON list")
        rules = []
        for i, entry in enumerate(raw):
            if not isinstance(entry, dict) or not {"id", "category", "pattern", "value"} <= set(entry):
                raise RuleFileInvalid(f"rule #{i}: missing fields")
            rules.append(
                GuardrailRule(
                    id=entry["id"],
                    category=entry["category"],
                    pattern=entry["pattern"],
                    value=entry["value"],
                )
            )
        return cls(rules)

    @classmethod
    def default(cls) -> "GuardrailRules":
        return cls.from_file(DEFAULT_RULES_PATH)

    def __len__(self) -> int:
        return len(self._compiled)

    def match(self, text: str) -> GuardrailRule | None:
        for rule, pattern in self._compiled:
            if pattern.search(text):
                return rule
        return None


def guardrail_check(request_text: str, rules: GuardrailRules) -> SafetyVerdict:
    """Case-insensitive evaluation of the ordered deny rules; pure function."""
    matched = rules.match(request_text)
    if matched is None:
        return SafetyVerdict(decision="Allow")
    return SafetyVerdict(decision="Deny", category=matched.category, matched_rule=matched.id)


# --- session state ----------------------------------------------------------


@dataclass
class TranscriptEntry:
    speaker: str  # "user" or an AgentRole value
    text: str
    ts: int


@dataclass
class HandoffRecord:
    from_role: AgentRole
    to_role: AgentRole
    reason: str
    at_version: int


@dataclass
class BlackboardEntry:
    key: str
    value: Any
    version: int  # per-key, strictly increasing
    author: AgentRole
    ts: int


@dataclass
class Stimulus:
    kind: str  # "user_message" | "event"
    text: str
    data: dict = field(default_factory=dict)


@dataclass
class SessionContext:
    """The shared-knowledge and coordination state of one operator session."""

    session_id: str
    active_agent: AgentRole = AgentRole.SUPERVISOR
    transcript: list[TranscriptEntry] = field(default_factory=list)
    blackboard_version: int = 0
    handoffs: list[HandoffRecord] = field(default_factory=list)
    board: dict[str, list[BlackboardEntry]] = field(default_factory=dict)
    now_min: int = 0
    last_stimulus: Stimulus | None = None


def handoff(ctx: SessionContext, to: AgentRole, reason: str) -> SessionContext:
    """Transfer the active-agent role; transcript and blackboard untouched."""
    to = AgentRole(to)
    if to is ctx.active_agent:
        raise SelfHandoff(f"{to.value} is already active")
    ctx.handoffs.append(
        HandoffRecord(
            from_role=ctx.active_agent,
            to_role=to,
            reason=reason,
            at_version=ctx.blackboard_version,
        )
    )
    ctx.active_agent = to
    return ctx


def blackboard_put(
    ctx: SessionContext,
    key: str,
    value: Any,
    expected_version: int,
    author: AgentRole | None = None,
    ts: int | None = None,
) -> int:
    """Optimistically-versioned write; per-key versions are strictly
    increasing and a stale expected_version leaves state unchanged.
    """
    history = ctx.board.get(key, [])
    current = history[-1].version if history else 0
    if expected_version != current:
        raise VersionConflict(
            f"key {key!r}: expected version {expected_version}, current is {current}"
        )
    entry = BlackboardEntry(
        key=key,
        value=value,
        version=current + 1,
        author=author if author is not None else ctx.active_agent,
        ts=ts if ts is not None else ctx.now_min,
    )
    ctx.board.setdefault(key, []).append(entry)
    ctx.blackboard_version += 1
    return entry.version


def blackboard_get(
    ctx: SessionContext, key: str, at_version: int | None = None
) -> BlackboardEntry | None:
    """Latest entry for a key, or the newest entry at or below a version."""
    history = ctx.board.get(key)
    if not history:
        return None
    if at_version is None:
        return history[-1]
    eligible = [e for e in history if e.version <= at_version]
    return eligible[-1] if eligible else None


def blackboard_value(ctx: SessionContext, key: str, default: Any = None) -> Any:
    entry = blackboard_get(ctx, key)
    return entry.value if entry is not None else default


# --- routing ----------------------------------------------------------------

# First-matching-category order: Molecule, Lab, Analysis, Report. Triggers are
# word-prefix patterns; a status question like "How's that job doing?" must
# reach Analysis, so bare "job"/"hplc" are deliberately not Lab triggers.
_ROUTE_TRIGGERS: tuple[tuple[AgentRole, tuple[str, ...]], ...] = (
    (
        AgentRole.MOLECULE,
        ("propose", "generate", "design", "visuali", "structure", "depict",
         "smiles", "optimi", "analog", "drug-likeness", "druglikeness"),
    ),
    (AgentRole.LAB, ("synthesi", "schedule", "run", "start", "create", "cancel")),
    (
        AgentRole.ANALYSIS,
        ("how's", "how is", "status", "doing", "result", "duration",
         "workload", "timeline", "yield", "purity", "chromatogram"),
    ),
    (AgentRole.REPORT, ("report", "summar", "attach", "document")),
)

_ROUTE_PATTERNS = [
    (role, [re.compile(rf"\b{re.escape(t)}", re.IGNORECASE) for t in triggers])
    for role, triggers in _ROUTE_TRIGGERS
]


def route(message_text: str, ctx: SessionContext) -> AgentRole:
    """Deterministic intent routing; unmatched messages fall back to the
    Supervisor for a clarification turn.
    """
    for role, patterns in _ROUTE_PATTERNS:
        if any(p.search(message_text) for p in patterns):
            return role
    return AgentRole.SUPERVISOR


# --- collaborative decisions -------------------------------------------------


def collaborative_decide(
    candidates: list[str],
    proposals: dict[AgentRole | str, dict[str, float]],
    weights: dict[AgentRole | str, float] | None = None,
) -> str:
    """argmax over candidates of the weighted sum of per-agent scores; ties
    broken by ascending candidate identifier. Weights default to 1.0.
    """
    if not candidates:
        raise EmptyCandidates("no candidates to decide between")
    weights = weights or {}
    for agent, weight in weights.items():
        if weight <= 0:
            raise ValueError(f"weight for {agent} must be positive")
    for agent, scores in proposals.items():
        for candidate in candidates:
            if candidate not in scores:
                raise MissingScore(f"agent {agent} did not score candidate {candidate!r}")
    totals = {
        candidate: sum(
            weights.get(agent, 1.0) * scores[candidate]
            for agent, scores in proposals.items()
        )
        for candidate in candidates
    }
    return min(candidates, key=lambda c: (-totals[c], c))


# --- actions and policies ----------------------------------------------------


@dataclass(frozen=True)
class ToolCallAction:
    tool: str
    args: dict
    save_as: str | None = None


@dataclass(frozen=True)
class SayAction:
    text: str


@dataclass(frozen=True)
class HandoffAction:
    to: AgentRole
    reason: str


AgentAction = ToolCallAction | SayAction | HandoffAction


def parse_action(data: Any) -> AgentAction:
    """Parse the constrained action grammar: JSON objects of
    {type: "tool"|"say"|"handoff", ...}. Raises PolicyError on anything else.
    """
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise PolicyError(f"action is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise PolicyError("action must be a JSON object")
    kind = data.get("type")
    if kind == "tool":
        if not isinstance(data.get("tool"), str) or not isinstance(data.get("args", {}), dict):
            raise PolicyError("tool action needs a tool name and object args")
        return ToolCallAction(
            tool=data["tool"], args=data.get("args", {}), save_as=data.get("save_as")
        )
    if kind == "say":
        if not isinstance(data.get("text"), str):
            raise PolicyError("say action needs text")
        return SayAction(text=data["text"])
    if kind == "handoff":
        try:
            to = AgentRole(data.get("to"))
        except ValueError as exc:
            raise PolicyError(f"handoff action has bad role: {data.get('to')!r}") from exc
        return HandoffAction(to=to, reason=data.get("reason", ""))
    raise PolicyError(f"unknown action type {kind!r}")


class PolicyProvider(Protocol):
    def plan(self, ctx: SessionContext, stimulus: Stimulus) -> list[AgentAction]:
        ...


@dataclass(frozen=True)
class ScriptedRule:
    """One declarative table row: trigger pattern -> action templates.

    `requires_board` keys must hold non-null blackboard values for the rule
    to fire; `agent` restricts the rule to one active agent.
    """

    trigger_kind: str  # "user_message" | "event"
    pattern: str
    actions: tuple[dict, ...]
    agent: AgentRole | None = None
    requires_board: tuple[str, ...] = ()


def _fill_match_groups(template, match: re.Match):
    """Substitute {match.<group>} placeholders from a regex match."""
    groups = {name: value or "" for name, value in (match.groupdict() or {}).items()}
    if isinstance(template, str):
        for name, value in groups.items():
            template = template.replace("{match." + name + "}", value)
        return template
    if isinstance(template, dict):
        return {k: _fill_match_groups(v, match) for k, v in template.items()}
    if isinstance(template, list):
        return [_fill_match_groups(v, match) for v in template]
    return template


class ScriptedPolicy:
    """Deterministic policy: first matching rule wins, its action templates
    are parsed through the same grammar the remote policy uses. Regex match
    groups fill {match.*} placeholders at plan time; other placeholders are
    resolved by the session engine at execution time.
    """

    def __init__(self, rules: list[ScriptedRule]):
        self._rules = [
            (rule, re.compile(rule.pattern, re.IGNORECASE)) for rule in rules
        ]

    def plan(self, ctx: SessionContext, stimulus: Stimulus) -> list[AgentAction]:
        for rule, pattern in self._rules:
            if rule.trigger_kind != stimulus.kind:
                continue
            if rule.agent is not None and rule.agent is not ctx.active_agent:
                continue
            if any(blackboard_value(ctx, key) is None for key in rule.requires_board):
                continue
            match = pattern.search(stimulus.text)
            if match is None:
                continue
            return [
                parse_action(_fill_match_groups(template, match))
                for template in rule.actions
            ]
        return []


def _default_transport(url: str, payload: dict, api_key: str | None, timeout: float) -> dict:
    body = json.dumps(payload).encode("utf-8")
    request = urllib.request.Request(url, data=body, method="POST")
    request.add_header("Content-Type", "application/json")
    if api_key:
        request.add_header("Authorization", f"Bearer {api_key}")
    with urllib.request.urlopen(request, timeout=timeout) as response:
        return json.loads(response.read().decode("utf-8"))


class RemoteLlmPolicy:
    """Adapter that forwards the transcript to an external chat-completion
    endpoint and parses one constrained action from the reply.

    Untested plumbing by design: malformed output surfaces as PolicyError and
    is never executed, and actions still pass through the guardrail and tool
    validation like any scripted action.
    """

    def __init__(
        self,
        endpoint_url: str,
        model: str,
        api_key: str | None = None,
        timeout: float = 30.0,
        transport: Callable[[str, dict, str | None, float], dict] | None = None,
    ):
        self.endpoint_url = endpoint_url
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self._transport = transport if transport is not None else _default_transport

    def plan(self, ctx: SessionContext, stimulus: Stimulus) -> list[AgentAction]:
        messages = [
            {"role": "user" if entry.speaker == "user" else "assistant", "content": entry.text}
            for entry in ctx.transcript
        ]
        payload = {"model": self.model, "messages": messages}
        try:
            response = self._transport(self.endpoint_url, payload, self.api_key, self.timeout)
            content = response["choices"][0]["message"]["content"]
        except PolicyError:
            raise
        except Exception as exc:  # noqa: BLE001 - remote faults are policy faults
            raise PolicyError(f"remote policy call failed: {exc}") from exc
        return [parse_action(content)]


def next_action(policy: PolicyProvider, ctx: SessionContext) -> AgentAction:
    """The next action the active agent's policy proposes for the session's
    latest stimulus; a clarification message when no rule applies.
    """
    stimulus = ctx.last_stimulus or Stimulus(kind="user_message", text="")
    plan = policy.plan(ctx, stimulus)
    if not plan:
        return SayAction(
            text=(
                "I can help with molecule design, lab runs, analytics, and "
                "reports. What would you like to do?"
            )
        )
    return plan[0]
