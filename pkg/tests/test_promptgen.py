import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import given, settings, strategies as st

from pglee.corpus import Lexicon, Sentence, tokenize
from pglee.promptgen import (
    CandidateArgument,
    CandidateEvent,
    GenConnectionError,
    GenHTTPError,
    GenProtocolError,
    PromptInstance,
    build_prompt,
    generate_external,
    generate_rule_based,
    parse_candidates,
    serialize_candidates,
)
from tests.conftest import GOLDEN_PROMPT, GOLDEN_Y


def make_sentence(text):
    return Sentence("s", text, tokenize(text))


word = st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=8)
phrase = st.lists(word, min_size=1, max_size=3).map(" ".join)


def event_lists():
    return st.lists(
        st.builds(
            lambda trig, args: CandidateEvent(trig, None, [CandidateArgument(a) for a in args]),
            phrase,
            st.lists(phrase, max_size=4),
        ),
        max_size=5,
    )


class TestBuildPrompt:
    def test_golden_example(self, golden_sentence, demo_lexicon):
        instance = build_prompt(golden_sentence, demo_lexicon)
        assert instance.prompt_text == GOLDEN_PROMPT
        assert instance.soft_token_count == 20

    def test_no_hits(self):
        lex = Lexicon(frozenset(), frozenset(), frozenset())
        assert build_prompt(make_sentence("nothing matches here."), lex).prompt_text == ""

    @given(st.lists(word, min_size=1, max_size=12))
    def test_subsequence_property(self, words):
        text = " ".join(words)
        sent = make_sentence(text)
        lex = Lexicon(frozenset(words[::2]), frozenset(words[1::3]), frozenset())
        prompt = build_prompt(sent, lex).prompt_text.rstrip(".")
        picked = prompt.split()
        it = iter(t.text for t in sent.tokens)
        assert all(p in it for p in picked)  # ordered subsequence

    def test_duplicates_kept(self):
        sent = make_sentence("war war war")
        lex = Lexicon(frozenset({"war"}), frozenset(), frozenset())
        assert build_prompt(sent, lex).prompt_text == "war war war"


class TestGrammar:
    def test_serialize_golden(self):
        events = [
            CandidateEvent("war", None, [CandidateArgument("Iraqi dictator")]),
            CandidateEvent("kill", None, [CandidateArgument("children"), CandidateArgument("women")]),
        ]
        assert serialize_candidates(events) == GOLDEN_Y

    def test_serialize_empty(self):
        assert serialize_candidates([]) == ""

    def test_serialize_zero_arguments(self):
        assert serialize_candidates([CandidateEvent("left")]) == "Event left has arguments: none."

    def test_parse_golden(self, golden_sentence):
        events, diag = parse_candidates(GOLDEN_Y, golden_sentence)
        assert len(events) == 2
        assert events[0].trigger_text == "war"
        assert [a.text for a in events[1].arguments] == ["children", "women"]
        assert not diag.skipped
        # spans align back to the sentence
        text = golden_sentence.text
        s, e = events[0].trigger_span
        assert text[s:e] == "war"
        s, e = events[1].arguments[0].span
        assert text[s:e] == "children"

    def test_parse_empty(self, golden_sentence):
        events, diag = parse_candidates("", golden_sentence)
        assert events == [] and not diag.skipped

    def test_parse_tolerant_case_and_newlines(self, golden_sentence):
        y = "EVENT war HAS ARGUMENTS: Iraqi dictator\nevent kill has arguments:children , women."
        events, _ = parse_candidates(y, golden_sentence)
        assert [e.trigger_text for e in events] == ["war", "kill"]
        assert [a.text for a in events[1].arguments] == ["children", "women"]

    def test_parse_skips_garbage(self, golden_sentence):
        y = "Event war has arguments: none; this is not grammar."
        events, diag = parse_candidates(y, golden_sentence)
        assert len(events) == 1
        assert diag.skipped == ["this is not grammar"]

    @settings(max_examples=200)
    @given(event_lists())
    def test_round_trip(self, events):
        sent = make_sentence("unrelated text")
        parsed, diag = parse_candidates(serialize_candidates(events), sent)
        assert not diag.skipped
        assert [e.trigger_text for e in parsed] == [e.trigger_text for e in events]
        assert [[a.text for a in e.arguments] for e in parsed] == [
            [a.text for a in e.arguments] for e in events
        ]


class TestRuleBackend:
    def test_table3_s2(self, s2_sentence, demo_lexicon):
        events = generate_rule_based(s2_sentence, demo_lexicon)
        assert len(events) == 1
        assert events[0].trigger_text == "rushed"
        assert [a.text for a in events[0].arguments] == ["Fehmi Husrev Kutlu", "Ozkan"]

    def test_golden_candidates(self, golden_sentence, demo_lexicon):
        events = generate_rule_based(golden_sentence, demo_lexicon)
        assert serialize_candidates(events) == GOLDEN_Y

    def test_zero_argument_event(self):
        sent = make_sentence("they left early")
        lex = Lexicon(frozenset({"left"}), frozenset(), frozenset())
        events = generate_rule_based(sent, lex)
        assert len(events) == 1 and events[0].arguments == []

    def test_no_triggers(self):
        sent = make_sentence("nothing here")
        lex = Lexicon(frozenset(), frozenset(), frozenset({"nothing"}))
        assert generate_rule_based(sent, lex) == []

    def test_nearest_trigger_attachment(self):
        # triggers at token positions 2 and 10, entity at position 4
        words = ["w0", "w1", "go", "w3", "acme", "w5", "w6", "w7", "w8", "w9", "run", "w11"]
        sent = make_sentence(" ".join(words))
        lex = Lexicon(frozenset({"go", "run"}), frozenset(), frozenset({"acme"}))
        events = generate_rule_based(sent, lex)
        assert events[0].trigger_text == "go"
        assert [a.text for a in events[0].arguments] == ["acme"]
        assert events[1].arguments == []

    def test_tie_goes_to_preceding_trigger(self):
        words = ["go", "w1", "acme", "w3", "run"]
        sent = make_sentence(" ".join(words))
        lex = Lexicon(frozenset({"go", "run"}), frozenset(), frozenset({"acme"}))
        events = generate_rule_based(sent, lex)
        assert [a.text for a in events[0].arguments] == ["acme"]

    def test_exhaustive_small_attachment(self):
        # every placement of one entity between two triggers obeys the
        # nearest-trigger rule with preceding-trigger tie-break
        for gap in range(1, 8):
            for pos in range(1, gap + 1):
                words = ["t0"] + [f"w{i}" for i in range(1, gap + 1)] + ["t1"]
                words[pos] = "acme"
                sent = make_sentence(" ".join(words))
                lex = Lexicon(frozenset({"t0", "t1"}), frozenset(), frozenset({"acme"}))
                events = generate_rule_based(sent, lex)
                d0, d1 = pos, (gap + 1) - pos
                expected = 0 if d0 <= d1 else 1
                owner = next(k for k, ev in enumerate(events) if ev.arguments)
                assert owner == expected, (gap, pos)

    def test_spans_within_sentence(self, s2_sentence, demo_lexicon):
        for ev in generate_rule_based(s2_sentence, demo_lexicon):
            s, e = ev.trigger_span
            assert s2_sentence.text[s:e] == ev.trigger_text
            for arg in ev.arguments:
                s, e = arg.span
                assert s2_sentence.text[s:e] == arg.text


class _Handler(BaseHTTPRequestHandler):
    response: tuple[int, bytes] = (200, b'{"output": ""}')

    def do_POST(self):
        self.rfile.read(int(self.headers.get("Content-Length", 0)))
        status, body = self.response
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def http_stub():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server, f"http://127.0.0.1:{server.server_address[1]}/generate"
    server.shutdown()


class TestExternalBackend:
    def test_echo_golden(self, http_stub, golden_sentence):
        server, url = http_stub
        _Handler.response = (200, ('{"output": "' + GOLDEN_Y.replace('"', '\\"') + '"}').encode())
        y = generate_external(PromptInstance("x", "p"), url, timeout=5)
        events, _ = parse_candidates(y, golden_sentence)
        assert len(events) == 2

    def test_unreachable(self):
        with pytest.raises(GenConnectionError):
            generate_external(PromptInstance("x", "p"), "http://127.0.0.1:9/generate", timeout=1)

    def test_http_error(self, http_stub):
        _, url = http_stub
        _Handler.response = (500, b'{"error": "boom"}')
        with pytest.raises(GenHTTPError) as err:
            generate_external(PromptInstance("x", "p"), url, timeout=5)
        assert err.value.status == 500

    def test_missing_output_field(self, http_stub):
        _, url = http_stub
        _Handler.response = (200, b'{"wrong": 1}')
        with pytest.raises(GenProtocolError):
            generate_external(PromptInstance("x", "p"), url, timeout=5)
