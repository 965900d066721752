import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from specreq.annotations import (
    ENTITY_LABELS,
    AnnotatedSample,
    AnnotationError,
    label_histogram,
    load_jsonl,
    sample_from_dict,
    save_jsonl,
    split_corpus,
    split_sizes,
)

RECORD = {
    "id": 7,
    "text": "porte 1 vantail",
    "title": "Portes",
    "entities": [
        {"id": 1, "label": "Door", "start_offset": 0, "end_offset": 5},
        {"id": 2, "label": "Number_of_Leaf", "start_offset": 6, "end_offset": 15},
    ],
    "relations": [{"id": 3, "from_id": 1, "to_id": 2, "type": "hasNumberOfLeaf"}],
    "Comments": [],
}


def test_labels():
    assert len(ENTITY_LABELS) == 16


def test_parse_and_round_trip(tmp_path):
    sample = sample_from_dict(RECORD)
    assert sample.entity(2).surface == "1 vantail"
    assert sample.extra == {"Comments": []}
    path = tmp_path / "c.jsonl"
    save_jsonl([sample], path)
    assert json.loads(path.read_text()) == RECORD
    assert load_jsonl(path)[0].relations == sample.relations


@pytest.mark.parametrize(
    "patch, fragment",
    [
        ({"entities": [{"id": 1, "label": "Door", "start_offset": 3, "end_offset": 99}]}, "outside text"),
        ({"entities": [{"id": 1, "label": "Door", "start_offset": 3, "end_offset": 3}]}, "offsets"),
        ({"relations": [{"id": 9, "from_id": 1, "to_id": 42, "type": "hasDimension"}]}, "unknown entity 42"),
        ({"text": None}, "string"),
    ],
)
def test_schema_errors(patch, fragment):
    with pytest.raises(AnnotationError, match=fragment):
        sample_from_dict({**RECORD, **patch})


def test_load_reports_line_number(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text(json.dumps(RECORD) + "\nnot json\n")
    with pytest.raises(AnnotationError, match="line 2"):
        load_jsonl(path)


@given(st.integers(0, 5000))
def test_split_sizes_partition(n):
    a, b, c = split_sizes(n)
    assert a + b + c == n and a == 7 * n // 10 and b == 2 * n // 10 and c >= 0


def _corpus(n):
    return [AnnotatedSample(i, f"t{i}") for i in range(n)]


def test_split_deterministic_and_disjoint():
    one = split_corpus(_corpus(50), seed=3)
    two = split_corpus(_corpus(50), seed=3)
    ids = lambda part: [s.id for s in part]  # noqa: E731
    assert ids(one.train) == ids(two.train) and ids(one.test) == ids(two.test)
    assert ids(split_corpus(_corpus(50), seed=4).train) != ids(one.train)
    everything = ids(one.train) + ids(one.validation) + ids(one.test)
    assert sorted(everything) == list(range(50))


def test_split_too_small():
    with pytest.raises(ValueError):
        split_corpus(_corpus(9), seed=0)


def test_stratified_split():
    samples = _corpus(40)
    for s in samples[:20]:
        s.entities.append(sample_from_dict(RECORD).entities[0])
    split = split_corpus(samples, seed=1, stratify="Door")
    with_door = lambda part: sum(1 for s in part if s.entities)  # noqa: E731
    assert (with_door(split.train), with_door(split.validation), with_door(split.test)) == (14, 4, 2)


def test_histogram():
    assert label_histogram([sample_from_dict(RECORD)]) == {"Door": 1, "Number_of_Leaf": 1, "hasNumberOfLeaf": 1}
