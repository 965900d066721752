from functools import lru_cache

from hypothesis import given, settings
from hypothesis import strategies as st

from specreq.preprocess import (
    CleanDocument,
    HeaderFooterReport,
    apply_preprocessing,
    detect_headers_footers,
    levenshtein,
    remove_cover,
    within_distance,
)

from conftest import make_doc

words = st.text(alphabet="abcé ", max_size=12)


def oracle(a: str, b: str) -> int:
    @lru_cache(maxsize=None)
    def d(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

    return d(len(a), len(b))


def test_levenshtein_examples():
    assert levenshtein("kitten", "sitting") == 3
    assert levenshtein("", "abc") == 3
    assert levenshtein("Page 9", "Page 10") == 2
    assert levenshtein("porte", "porte") == 0


@given(words, words)
def test_levenshtein_matches_oracle(a, b):
    assert levenshtein(a, b) == oracle(a, b)


@given(words, words)
def test_levenshtein_metric_bounds(a, b):
    d = levenshtein(a, b)
    assert d == levenshtein(b, a)
    assert abs(len(a) - len(b)) <= d <= max(len(a), len(b))
    assert (d == 0) == (a == b)


@given(words, words, words)
@settings(max_examples=50)
def test_levenshtein_triangle(a, b, c):
    assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


@given(words, words, st.integers(0, 6))
def test_within_distance_agrees(a, b, k):
    assert within_distance(a, b, k) == (levenshtein(a, b) <= k)


BODY = [
    "Les menuiseries exterieures seront en aluminium thermolaque.",
    "Fourniture et pose de blocs-portes.",
    "Vitrage isolant 4/16/4.",
    "Classement AEV minimal exige par le bureau de controle.",
    "Quincaillerie inox.",
    "Les seuils sont a rupture de pont thermique conformement au DTU.",
    "Joints EPDM.",
]


def _pages(n, body_len=3, figures=()):
    pages = []
    for i in range(n):
        body = [BODY[(3 * i + j) % len(BODY)] for j in range(body_len + i % 2)]
        if i in figures:
            pages.append(body + [f"Page {i + 1}"])
        else:
            pages.append(["CCTP Menuiseries"] + body + [f"Page {i + 1}"])
    return pages


def test_detects_header_and_footer_with_varying_lengths():
    report = detect_headers_footers(make_doc(_pages(6)))
    assert report.canonical_texts == {"CCTP Menuiseries", "Page 1"}
    keys = {k for k, _ in report.detected_lines}
    m = report.reference_length
    assert keys == {0, m}    # first line, last line
    assert len(report.removals) == 12


def test_figure_pages_tolerated():
    report = detect_headers_footers(make_doc(_pages(6, figures={2, 4}), figures={2, 4}))
    assert report.canonical_texts == {"CCTP Menuiseries", "Page 1"}
    assert report.skipped_pages == (2, 4)


def test_non_figure_mismatch_rejects_position():
    pages = _pages(6)
    pages[3][0] = "Un titre totalement different"
    report = detect_headers_footers(make_doc(pages))
    assert report.canonical_texts == {"Page 1"}


def test_threshold_controls_page_number_drift():
    # reference footer "Folio" drifts to "Folio nnnnnn" (7 edits)
    pages = [["Header", BODY[i], f"Folio {'n' * i}"] for i in range(7)]
    assert detect_headers_footers(make_doc(pages), threshold=7).canonical_texts == {"Header", "Folio"}
    assert detect_headers_footers(make_doc(pages), threshold=5).canonical_texts == {"Header"}


def test_empty_reference_lines_ignored():
    pages = [["", "texte a"], ["", "texte b" + "z" * 20]]
    assert detect_headers_footers(make_doc(pages)).detected_lines == frozenset()


def test_single_page_flagged():
    report = detect_headers_footers(make_doc([["x"]]))
    assert report.insufficient_pages and not report.detected_lines


def test_report_round_trip():
    report = detect_headers_footers(make_doc(_pages(4)))
    assert HeaderFooterReport.from_dict(report.to_dict()) == report


def test_remove_cover_renumbers():
    doc = remove_cover(make_doc([["cover"], ["a"], ["b"]], figures={2}))
    assert [p.index for p in doc.pages] == [0, 1]
    assert doc.pages[1].has_figure


def test_apply_preprocessing_keeps_original_indices():
    pages = [["COUVERTURE"], ["CCTP Menuiseries", "Sommaire", "Page 0"], []] + _pages(4)
    clean = apply_preprocessing(make_doc(pages), toc_region=(1, 1))
    assert clean.provenance.cover_pages == (0,)
    assert clean.provenance.blank_pages == (2,)
    assert clean.provenance.toc_pages == (1,)
    assert [p.index for p in clean.pages] == [3, 4, 5, 6]
    assert clean.provenance.header_footer.reference_page == 1
    first = clean.pages[0]
    assert "CCTP Menuiseries" not in first.lines and not any(s.startswith("Page") for s in first.lines)
    assert first.line_numbers[0] == 1
    again = CleanDocument.from_dict(clean.to_dict())
    assert again.pages == clean.pages and again.provenance.toc_pages == (1,)
