import re

import pytest
from hypothesis import given
from hypothesis import strategies as st

from specreq.annotations import ENTITY_LABELS, EntitySpan
from specreq.textproc import (
    AlignmentError,
    LexiconTagger,
    OverlapError,
    PrecomputedTagger,
    bilou_decode,
    bilou_encode,
    grammar_violations,
    is_valid_sequence,
    parse_tag,
    pos_tag,
    sentence_boundaries,
    sentences_between,
    tokenize,
)

REFERENCE_ROW = "fourniture et pose d'une porte pleine 1 vantail en aluminium thermolaqué. Dimensions 93×225 cm"


def surfaces(text):
    return [t.surface for t in tokenize(text)]


def test_tokenize_examples():
    assert surfaces("d'une porte") == ["d", "'", "une", "porte"]
    assert surfaces("R = 1.46 W/m²°C") == ["R", "=", "1.46", "W", "/", "m²", "°", "C"]
    assert surfaces("93×225 cm") == ["93×225", "cm"]
    assert surfaces("RA,tr ≥ 35 dB") == ["RA", ",", "tr", "≥", "35", "dB"]


@given(st.text(alphabet="ab1 ,.'×\n-é", max_size=40))
def test_tokenize_covers_text(text):
    tokens = tokenize(text)
    rebuilt, pos = [], 0
    for t in tokens:
        gap = text[pos:t.start]
        assert gap.strip() == ""
        assert text[t.start:t.end] == t.surface
        rebuilt.append(gap + t.surface)
        pos = t.end
    assert text[pos:].strip() == ""
    assert "".join(rebuilt) + text[pos:] == text


def test_sentences():
    text = "Porte pleine. Dimensions 93×225 cm\nFenêtre 1.46 W"
    bounds = sentence_boundaries(text)
    assert len(bounds) == 3
    assert sentences_between(bounds, 0, 5) == 0
    assert sentences_between(bounds, 5, 40) == 2
    assert sentences_between(bounds, 5, len(text)) == 3


@pytest.mark.parametrize("word, pos", [("vantaux", "NOUN"), ("deux", "NUM"), ("zzqx", "X"), ("12", "NUM"),
                                       (",", "PUNCT"), ("porte", "NOUN"), ("installation", "NOUN")])
def test_pos_examples(word, pos):
    assert LexiconTagger.default().tag_word(word) == pos


def test_pos_precomputed_and_fallback():
    tokens = tokenize("porte pleine")
    tagger = PrecomputedTagger({"s1": ["A", "B"]})
    assert [t.pos for t in tagger.tag(tokens, "s1")] == ["A", "B"]
    assert [t.pos for t in tagger.tag(tokens, "other")] == [t.pos for t in pos_tag(tokens)]


def _span(text, surface, label, occurrence=0):
    starts = [m.start() for m in re.finditer(re.escape(surface), text)]
    start = starts[occurrence]
    return EntitySpan(label, start, start + len(surface), surface)


def test_reference_tag_row():
    tokens = tokenize(REFERENCE_ROW)
    spans = [_span(REFERENCE_ROW, "porte", "Door"), _span(REFERENCE_ROW, "1 vantail", "Number_of_Leaf"),
             _span(REFERENCE_ROW, "93×225 cm", "Dimension")]
    tags = bilou_encode(tokens, spans)
    assert tags == ["O"] * 6 + ["U-Door", "O", "B-Number_of_Leaf", "L-Number_of_Leaf"] + ["O"] * 5 + [
        "B-Dimension", "L-Dimension"]
    assert bilou_decode(tokens, tags, REFERENCE_ROW) == sorted(spans, key=lambda s: s.start)


def test_overlap_tag():
    text = "porte EI 30 93×225 cm"
    tokens = tokenize(text)
    dim = EntitySpan("Dimension", 6, len(text))
    fire = EntitySpan("Fire_Resistance", 6, 11)
    tags = bilou_encode(tokens, [fire, dim])
    assert tags[1] == "B-Dimension_B-Fire_Resistance"
    inner = EntitySpan("Fire_Resistance", 9, 11)
    assert bilou_encode(tokens, [dim, inner])[2] == "I-Dimension_U-Fire_Resistance"
    wide = EntitySpan("Dimension", 0, len(text))
    starting_inside = EntitySpan("Fire_Resistance", 6, 11)
    assert bilou_encode(tokens, [wide, starting_inside])[1] == "I-Dimension_B-Fire_Resistance"
    tags = bilou_encode(tokens, [wide, starting_inside])
    assert is_valid_sequence(tags)
    assert set(bilou_decode(tokens, tags)) == {wide, starting_inside}


def test_encode_errors():
    tokens = tokenize("porte pleine")
    with pytest.raises(AlignmentError, match="Door"):
        bilou_encode(tokens, [EntitySpan("Door", 1, 5, "orte")])
    with pytest.raises(OverlapError):
        bilou_encode(tokens, [EntitySpan("Door", 0, 12), EntitySpan("Bay", 0, 5), EntitySpan("Window", 0, 5)])


def test_decode_lenient():
    tokens = tokenize("porte pleine bois")
    notes = []
    spans = bilou_decode(tokens, ["O", "I-Door", "L-Door"], notes=notes)
    assert [(s.start, s.end) for s in spans] == [(6, 17)] and notes
    assert bilou_decode(tokens, ["O", "O", "O"]) == []
    assert [(s.start, s.end) for s in bilou_decode(tokens, ["B-Door", "L-Door", "O"])] == [(0, 12)]


def test_grammar():
    assert is_valid_sequence(["B-Door", "I-Door", "L-Door", "U-Bay", "O"])
    assert grammar_violations(["O", "L-Door"]) == [1]
    assert grammar_violations(["B-Door", "O"]) == [1]
    assert grammar_violations(["B-Door"]) == [1]
    with pytest.raises(ValueError):
        parse_tag("X-Door")


@st.composite
def span_sets(draw):
    words = draw(st.lists(st.sampled_from(["porte", "1", "vantail", ",", "93×225", "cm", "EI", "30"]),
                          min_size=1, max_size=15))
    text = " ".join(words)
    tokens = tokenize(text)
    spans, i = [], 0
    while i < len(tokens):
        if draw(st.booleans()):
            j = draw(st.integers(i, min(len(tokens) - 1, i + 3)))
            spans.append(EntitySpan(draw(st.sampled_from(ENTITY_LABELS)), tokens[i].start, tokens[j].end))
            i = j + 1
        else:
            i += 1
    return text, tokens, spans


@given(span_sets())
def test_round_trip_property(case):
    text, tokens, spans = case
    tags = bilou_encode(tokens, spans)
    assert is_valid_sequence(tags)
    assert bilou_decode(tokens, tags) == sorted(spans, key=lambda s: (s.start, s.end, s.label))
