"""Prompt construction, candidate-event grammar, and generation backends.

The candidate grammar (shared with the generation service):

    Event {trigger} has arguments: {a1}, {a2}; Event {trigger} has arguments: none.

Events are joined by "; " and the whole string ends with ".". A
zero-argument event renders its argument list as "none".
"""

import re
from dataclasses import dataclass, field

import requests

from pglee.corpus import Lexicon, Sentence

_TERMINAL_PUNCT = {".", "!", "?"}


@dataclass
class PromptInstance:
    input_text: str
    prompt_text: str
    soft_token_count: int = 20


@dataclass
class CandidateArgument:
    text: str
    span: tuple[int, int] | None = None


@dataclass
class CandidateEvent:
    trigger_text: str
    trigger_span: tuple[int, int] | None = None
    arguments: list[CandidateArgument] = field(default_factory=list)


@dataclass
class ParseDiagnostics:
    skipped: list[str] = field(default_factory=list)


class GenerationError(Exception):
    """Base error for the external generation backend."""


class GenTimeout(GenerationError):
    pass


class GenConnectionError(GenerationError):
    pass


class GenHTTPError(GenerationError):
    def __init__(self, status: int, detail: str = ""):
        super().__init__(f"generation service returned {status}: {detail}")
        self.status = status


class GenProtocolError(GenerationError):
    """Response did not carry the expected "output" field."""


def _gazetteer_matches(sentence: Sentence, lexicon: Lexicon) -> list[tuple[int, int]]:
    """Maximal gazetteer matches as (first_token, last_token) index pairs,
    longest-match-first at each position, non-overlapping."""
    tokens = sentence.tokens
    if not lexicon.entity_gazetteer:
        return []
    max_len = max(len(e.split()) for e in lexicon.entity_gazetteer)
    matches = []
    i = 0
    while i < len(tokens):
        found = None
        for length in range(min(max_len, len(tokens) - i), 0, -1):
            surface = " ".join(t.text for t in tokens[i : i + length]).lower()
            if surface in lexicon.entity_gazetteer:
                found = (i, i + length - 1)
                break
        if found:
            matches.append(found)
            i = found[1] + 1
        else:
            i += 1
    return matches


def build_prompt(sentence: Sentence, lexicon: Lexicon, soft_token_count: int = 20) -> PromptInstance:
    """Select the sentence's nouns, verbs and gazetteer entities, in order.

    The sentence-final punctuation token, when present, is kept attached to
    the last selected word so the prompt reads like the original clause.
    """
    tokens = sentence.tokens
    gaz = _gazetteer_matches(sentence, lexicon)
    covered = set()
    starts = {}
    for lo, hi in gaz:
        starts[lo] = hi
        covered.update(range(lo, hi + 1))
    picked: list[str] = []
    for idx, tok in enumerate(tokens):
        if idx in starts:
            picked.append(" ".join(t.text for t in tokens[idx : starts[idx] + 1]))
        elif idx in covered:
            continue
        elif tok.text.lower() in lexicon.verbs or tok.text.lower() in lexicon.nouns:
            picked.append(tok.text)
    prompt = " ".join(picked)
    if picked and tokens and tokens[-1].text in _TERMINAL_PUNCT:
        prompt += tokens[-1].text
    return PromptInstance(sentence.text, prompt, soft_token_count)


def serialize_candidates(events: list[CandidateEvent]) -> str:
    if not events:
        return ""
    parts = []
    for ev in events:
        if ev.arguments:
            args = ", ".join(a.text for a in ev.arguments)
        else:
            args = "none"
        parts.append(f"Event {ev.trigger_text} has arguments: {args}")
    return "; ".join(parts) + "."


_EVENT_RE = re.compile(r"event\s+(.+?)\s+has\s+arguments\s*:\s*(.*)", re.IGNORECASE | re.DOTALL)


def _align_span(text: str, sentence: Sentence, consumed: set[int]) -> tuple[int, int] | None:
    """Earliest unconsumed token-sequence match of ``text`` in the sentence."""
    want = text.lower().split()
    tokens = sentence.tokens
    for i in range(len(tokens) - len(want) + 1):
        if i in consumed:
            continue
        if all(tokens[i + k].text.lower() == want[k] for k in range(len(want))):
            consumed.update(range(i, i + len(want)))
            return (tokens[i].start, tokens[i + len(want) - 1].end)
    return None


def parse_candidates(y_text: str, sentence: Sentence) -> tuple[list[CandidateEvent], ParseDiagnostics]:
    """Tolerant parse of the candidate grammar; fragments that do not match
    are collected in the diagnostics rather than aborting."""
    diag = ParseDiagnostics()
    events: list[CandidateEvent] = []
    stripped = y_text.strip()
    if not stripped:
        return events, diag
    if stripped.endswith("."):
        stripped = stripped[:-1]
    consumed: set[int] = set()
    for fragment in re.split(r";|\n", stripped):
        fragment = fragment.strip()
        if not fragment:
            continue
        m = _EVENT_RE.fullmatch(fragment)
        if not m:
            diag.skipped.append(fragment)
            continue
        trigger = m.group(1).strip()
        arg_blob = m.group(2).strip()
        if not trigger:
            diag.skipped.append(fragment)
            continue
        ev = CandidateEvent(trigger, _align_span(trigger, sentence, consumed))
        if arg_blob and arg_blob.lower() != "none":
            for arg_text in arg_blob.split(","):
                arg_text = arg_text.strip()
                if arg_text:
                    ev.arguments.append(CandidateArgument(arg_text, _align_span(arg_text, sentence, consumed)))
        events.append(ev)
    return events, diag


def generate_rule_based(sentence: Sentence, lexicon: Lexicon) -> list[CandidateEvent]:
    """Deterministic candidate generator: verb-lexicon triggers, gazetteer
    arguments, each argument attached to its nearest trigger (ties go to the
    preceding trigger)."""
    tokens = sentence.tokens
    # nouns qualify only when the verbs list also carries them, so a plain
    # verbs-list membership test covers both trigger sources
    trigger_idxs = [i for i, tok in enumerate(tokens) if tok.text.lower() in lexicon.verbs]
    events = [
        CandidateEvent(tokens[i].text, (tokens[i].start, tokens[i].end)) for i in trigger_idxs
    ]
    if not events:
        return []
    for lo, hi in _gazetteer_matches(sentence, lexicon):
        text = " ".join(t.text for t in tokens[lo : hi + 1])
        span = (tokens[lo].start, tokens[hi].end)
        best = min(
            range(len(trigger_idxs)),
            key=lambda k: (
                min(abs(trigger_idxs[k] - j) for j in range(lo, hi + 1)),
                trigger_idxs[k],
            ),
        )
        events[best].arguments.append(CandidateArgument(text, span))
    return events


def generate_external(instance: PromptInstance, endpoint: str, timeout: float = 10.0) -> str:
    """POST the prompt triple to the generation service; returns y verbatim."""
    body = {
        "input": instance.input_text,
        "prompt": instance.prompt_text,
        "soft_tokens": instance.soft_token_count,
    }
    try:
        resp = requests.post(endpoint, json=body, timeout=timeout)
    except requests.Timeout as exc:
        raise GenTimeout(str(exc)) from exc
    except requests.ConnectionError as exc:
        raise GenConnectionError(str(exc)) from exc
    if not (200 <= resp.status_code < 300):
        detail = ""
        try:
            detail = resp.json().get("error", "")
        except ValueError:
            pass
        raise GenHTTPError(resp.status_code, detail)
    try:
        payload = resp.json()
    except ValueError as exc:
        raise GenProtocolError("response is not JSON") from exc
    if "output" not in payload or not isinstance(payload["output"], str):
        raise GenProtocolError('response is missing the "output" string field')
    return payload["output"]
