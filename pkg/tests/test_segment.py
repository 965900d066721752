import pytest

from specreq.preprocess import CleanDocument
from specreq.segment import (
    build_hierarchy,
    classify_headline,
    extract_raw_requirements,
    locate_toc,
    normalize_toc_line,
    regenerate_toc,
)

from conftest import make_doc


@pytest.mark.parametrize(
    "line, number, level, title",
    [
        ("1 Généralités", "1", 1, "Généralités"),
        ("2.3.1 Portes intérieures", "2.3.1", 3, "Portes intérieures"),
        ("II.3 - Menuiseries", "II.3", 2, "Menuiseries"),
        ("Article 4 : Vitrages", "4", 1, "Vitrages"),
        ("1.2. Seuils", "1.2", 2, "Seuils"),
        ("Chapitre 3", "3", 1, ""),
        ("1.1 L'ouvrage", "1.1", 2, "L'ouvrage"),
    ],
)
def test_headlines(line, number, level, title):
    parts = classify_headline(line)
    assert parts is not None and (parts.number_token, parts.level, parts.title) == (number, level, title)


@pytest.mark.parametrize(
    "line",
    ["2 vantaux de 90 cm", "La porte 1 vantail", "    1 Trop indenté", "1.46 W/m²°C", "", "93×225 cm", "3", "12"],
)
def test_non_headlines(line):
    assert classify_headline(line) is None


def _clean(pages):
    return CleanDocument.from_document(make_doc(pages))


def test_hierarchy_and_requirements():
    root = build_hierarchy(_clean([
        ["1 Généralités", "Texte général", "suite du texte", "", "Second paragraphe"],
        ["1.1 Portes", "Porte pleine.", "1.2 Fenêtres", "Fenêtre"],
        ["2 Vitrages", "Double vitrage"],
    ]))
    assert regenerate_toc(root) == [("1", "Généralités"), ("1.1", "Portes"), ("1.2", "Fenêtres"), ("2", "Vitrages")]
    assert root.children[0].paragraph_texts == ["Texte général suite du texte", "Second paragraphe"]
    reqs = extract_raw_requirements(root, "d")
    assert [r.req_id for r in reqs] == ["d#0", "d#1", "d#2"]
    assert reqs[0].text == "Texte général suite du texte\nSecond paragraphe\nPorte pleine."
    assert reqs[0].hierarchy_path == ["Généralités", "Portes"] and reqs[0].number_path == ["1", "1.1"]
    assert reqs[2].text == "Double vitrage" and reqs[2].title == "Vitrages"
    assert not root.warnings


def test_page_break_continues_paragraph():
    root = build_hierarchy(_clean([["1 Titre", "début de phrase"], ["fin de phrase"]]))
    assert root.children[0].paragraph_texts == ["début de phrase fin de phrase"]


def test_char_map_locates_source_lines():
    root = build_hierarchy(_clean([["1 Titre", "ligne a", "ligne b"], ["", "ligne c"]]))
    req = extract_raw_requirements(root)[0]
    assert req.text == "ligne a ligne b\nligne c"
    assert (req.locate(0).page_index, req.locate(0).line_index) == (0, 1)
    assert req.locate(9).line_index == 2
    assert (req.locate(16).page_index, req.locate(16).line_index) == (1, 1)
    for span in req.char_map:
        assert req.text[span.start:span.end].startswith("ligne")


def test_warnings():
    root = build_hierarchy(_clean([["1 Titre", "1.1.1 Profond", "x", "2 Suite", "3.1 Ailleurs", "y"]]))
    kinds = [w.kind for w in root.warnings]
    assert kinds == ["level_jump", "numbering_inconsistency"]
    assert build_hierarchy(_clean([["juste du texte"]])).warnings[0].kind == "no_numbering"


def test_unnumbered_text_is_one_requirement():
    reqs = extract_raw_requirements(build_hierarchy(_clean([["texte libre"]])))
    assert [r.text for r in reqs] == ["texte libre"]


def test_normalize_toc_line():
    assert normalize_toc_line("1.1 Portes ........ 4") == "1.1 portes"
    assert normalize_toc_line("2  Vitrages   12") == "2 vitrages"


def test_locate_toc():
    clean = _clean([
        ["SOMMAIRE", "1 Généralités ....... 3", "1.1 Portes ....... 3", "2 Vitrages ..... 4"],
        ["1 Généralités", "texte", "1.1 Portes", "texte"],
        ["2 Vitrages", "texte"],
    ])
    from specreq.segment import headlines

    assert locate_toc(clean, headlines(build_hierarchy(clean))) == (0, 0)
    body_only = _clean([["1 Généralités", "texte"], ["2 Vitrages", "texte"]])
    assert locate_toc(body_only, headlines(build_hierarchy(body_only))) is None
