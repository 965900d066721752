import json

import pytest

from specreq.docmodel import IngestionError, blank_page_indices, document_from_dict, load_document, save_document

from conftest import DEMO_DOCUMENTS


def test_round_trip(tmp_path):
    data = {"doc_id": "d1", "pages": [{"index": 0, "lines": ["a", "b"], "has_figure": False},
                                      {"index": 1, "lines": [], "has_figure": True}]}
    doc = document_from_dict(data)
    path = tmp_path / "d.json"
    save_document(doc, path)
    again = load_document(path)
    assert again.to_dict() == data
    assert again.pages[1].has_figure


def test_lines_kept_verbatim():
    doc = document_from_dict({"pages": [{"index": 0, "lines": ["  indented  ", ""]}]})
    assert doc.pages[0].lines == ("  indented  ", "")
    assert doc.doc_id == "document"


def test_doc_id_from_file_name(tmp_path):
    path = tmp_path / "cctp_x.json"
    path.write_text(json.dumps({"pages": [{"index": 0, "lines": ["x"]}]}))
    assert load_document(path).doc_id == "cctp_x"


@pytest.mark.parametrize(
    "data, fragment",
    [
        ([], "pages"),
        ({"pages": []}, "no pages"),
        ({"pages": [{"index": 1, "lines": []}]}, "contiguous"),
        ({"pages": [{"index": 0, "lines": [1]}]}, "list of strings"),
        ({"pages": [{"index": 0, "lines": [], "has_figure": "yes"}]}, "boolean"),
        ({"pages": ["x"]}, "object"),
    ],
)
def test_malformed_input(data, fragment):
    with pytest.raises(IngestionError, match=fragment):
        document_from_dict(data)


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{")
    with pytest.raises(IngestionError, match="invalid JSON"):
        load_document(path)


def test_blank_pages():
    doc = document_from_dict({"pages": [{"index": 0, "lines": ["x"]}, {"index": 1, "lines": ["  ", ""]},
                                        {"index": 2, "lines": []}]})
    assert blank_page_indices(doc) == [1, 2]


def test_demo_documents_load():
    assert len(DEMO_DOCUMENTS) >= 5
    for path in DEMO_DOCUMENTS:
        doc = load_document(path)
        assert doc.pages and doc.pages[0].index == 0
