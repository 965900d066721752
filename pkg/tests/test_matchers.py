import unicodedata

import pytest
from hypothesis import given
from hypothesis import strategies as st

from specreq.annotations import PROPERTY_LABELS, AnnotatedSample, EntitySpan
from specreq.evaluation import validate_rule_based
from specreq.ner.matchers import (
    DictionaryPack,
    PackError,
    RulePack,
    dict_match,
    fold_with_offsets,
    numeric_context_filter,
    rule_match,
)


def found(spans):
    return [(s.label, s.surface) for s in spans]


def test_dictionary_longest_match():
    text = "Les blocs-portes et la Porte-Fenêtre, puis une porte."
    assert found(dict_match(text, DictionaryPack.default())) == [
        ("Door_Assembly", "blocs-portes"), ("French_Door", "Porte-Fenêtre"), ("Door", "porte")]


def test_dictionary_whole_tokens_only():
    assert dict_match("emporter les portefeuilles", DictionaryPack.default()) == []


def test_dictionary_decomposed_accents_keep_offsets():
    text = unicodedata.normalize("NFD", "une fenêtre")
    spans = dict_match(text, DictionaryPack.default())
    assert len(spans) == 1 and spans[0].start == 4 and spans[0].end == len(text)
    assert spans[0].surface == text[4:]


@given(st.text(max_size=30))
def test_fold_offsets_monotone(text):
    folded, starts, ends = fold_with_offsets(text)
    assert len(folded) == len(starts) == len(ends)
    assert starts == sorted(starts) and all(0 <= a < b <= len(text) for a, b in zip(starts, ends))


def test_equal_length_tie_goes_to_first_label():
    pack = DictionaryPack({"Bay": ["baie"], "Window": ["baie"]})
    assert found(dict_match("une baie", pack)) == [("Bay", "baie")]


@pytest.mark.parametrize(
    "text, label, surface",
    [
        ("fenêtre RA,tr ≥ 35 dB", "Acoustic_Attenuation", "RA,tr ≥ 35 dB"),
        ("porte-fenêtre R = 1.46 W/m²°C", "Thermic_Coefficient", "R = 1.46 W/m²°C"),
        ("dimensions 93×225 cm", "Dimension", "93×225 cm"),
        ("porte 1 vantail", "Number_of_Leaf", "1 vantail"),
        ("porte EI 30", "Fire_Resistance", "EI 30"),
        ("porte CF 1/2 h", "Fire_Resistance", "CF 1/2 h"),
        ("porte PF 1 h", "Flame_Arrester", "PF 1 h"),
        ("classement A*3 E*7B V*A2", "Watertight", "E*7B"),
        ("classement A*3 E*7B V*A2", "Air_Permeability", "A*3"),
        ("classement A*3 E*7B V*A2", "Wind_Resistance", "V*A2"),
    ],
)
def test_rules(text, label, surface):
    assert (label, surface) in found(rule_match(text, RulePack.default()))


def test_default_rules_cover_all_properties():
    assert set(RulePack.default().patterns) == set(PROPERTY_LABELS)


def test_pack_errors(tmp_path):
    with pytest.raises(PackError, match="compile"):
        RulePack({"Dimension": ["(\\d+"]})
    with pytest.raises(PackError, match="backreference"):
        RulePack({"Dimension": ["(\\d)\\1"]})
    with pytest.raises(PackError, match="empty"):
        DictionaryPack({"Door": [" "]})
    path = tmp_path / "rules.json"
    path.write_text('{"Dimension": ["\\\\d+ cm"]}')
    assert found(rule_match("12 cm", RulePack.load(path))) == [("Dimension", "12 cm")]


def test_verb_trap_lowers_door_precision():
    # "porte" is also a form of the verb "porter"
    text = "Il porte la caisse. La porte 1 vantail."
    gold = AnnotatedSample("trap", text, [EntitySpan("Door", 23, 28), EntitySpan("Number_of_Leaf", 29, 38)])
    report = validate_rule_based([gold], DictionaryPack.default(), RulePack.default()).span
    door = report.per_label["Door"]
    assert door.recall == 1.0 and door.precision == 0.5
    filtered = numeric_context_filter(text, dict_match(text, DictionaryPack.default()))
    assert [(s.start, s.end) for s in filtered] == [(23, 28)]


def test_numeric_filter_leaves_other_labels():
    text = "Les fenêtres sont posées."
    assert numeric_context_filter(text, dict_match(text, DictionaryPack.default()))


def test_empty_rule_pack(demo_samples):
    full = validate_rule_based(demo_samples, DictionaryPack.default(), RulePack.default()).span
    empty = validate_rule_based(demo_samples, DictionaryPack.default(), RulePack({})).span
    for label in PROPERTY_LABELS:
        assert empty.per_label[label].recall == 0.0
    for label, metrics in full.per_label.items():
        if label not in PROPERTY_LABELS:
            assert empty.per_label[label] == metrics
