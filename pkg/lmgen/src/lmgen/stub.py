"""Deterministic stub generator.

The stub applies the rule grammar to the request's prompt tokens: verb-list
tokens become event triggers, gazetteer matches become arguments attached to
the nearest trigger, and the result is serialized in the candidate grammar
("Event T has arguments: A, B; ...") that the client parses.
"""

from dataclasses import dataclass, field

_PUNCT = ".,!?;:\"'()[]"


def load_word_list(path: str) -> frozenset[str]:
    """One lowercase entry per line; blank lines ignored."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip().lower() for line in fh if line.strip())


def tokenize(text: str) -> list[str]:
    """Whitespace split with leading/trailing punctuation peeled off."""
    tokens: list[str] = []
    for chunk in text.split():
        lo, hi = 0, len(chunk)
        while lo < hi and chunk[lo] in _PUNCT and hi - lo > 1:
            tokens.append(chunk[lo])
            lo += 1
        trailing: list[str] = []
        while hi > lo + 1 and chunk[hi - 1] in _PUNCT:
            trailing.append(chunk[hi - 1])
            hi -= 1
        tokens.append(chunk[lo:hi])
        tokens.extend(reversed(trailing))
    return tokens


@dataclass
class StubModel:
    verbs: frozenset[str] = frozenset()
    gazetteer: frozenset[str] = frozenset()

    def generate(self, input_text: str, prompt_text: str, soft_tokens: int = 20) -> str:
        if not input_text:
            return ""
        tokens = tokenize(prompt_text)
        triggers = [i for i, t in enumerate(tokens) if t.lower() in self.verbs]
        if not triggers:
            return ""
        events: list[_Event] = [_Event(tokens[i]) for i in triggers]
        for lo, hi in self._gazetteer_matches(tokens):
            best = min(
                range(len(triggers)),
                key=lambda k: (
                    min(abs(triggers[k] - j) for j in range(lo, hi + 1)),
                    triggers[k],
                ),
            )
            events[best].arguments.append(" ".join(tokens[lo : hi + 1]))
        return serialize(events)

    def _gazetteer_matches(self, tokens: list[str]) -> list[tuple[int, int]]:
        """Maximal non-overlapping matches, longest first at each position."""
        if not self.gazetteer:
            return []
        max_len = max(len(e.split()) for e in self.gazetteer)
        matches = []
        i = 0
        while i < len(tokens):
            found = None
            for length in range(min(max_len, len(tokens) - i), 0, -1):
                if " ".join(tokens[i : i + length]).lower() in self.gazetteer:
                    found = (i, i + length - 1)
                    break
            if found:
                matches.append(found)
                i = found[1] + 1
            else:
                i += 1
        return matches


@dataclass
class _Event:
    trigger: str
    arguments: list[str] = field(default_factory=list)


def serialize(events: list[_Event]) -> str:
    if not events:
        return ""
    parts = []
    for ev in events:
        args = ", ".join(ev.arguments) if ev.arguments else "none"
        parts.append(f"Event {ev.trigger} has arguments: {args}")
    return "; ".join(parts) + "."
