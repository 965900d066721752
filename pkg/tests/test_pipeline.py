import json

import jsonschema
import pytest

from specreq.annotations import EntitySpan
from specreq.docmodel import load_document
from specreq.pipeline import (
    ConfigError,
    Extractor,
    NerEngine,
    PipelineConfig,
    assemble_requirements,
    parse_property_triplet,
    segment_document,
)
from specreq.segment import RawRequirement

from conftest import DEMO_CONFIG, DEMO_DOCUMENTS, data_path


@pytest.mark.parametrize(
    "surface, label, triplet",
    [
        ("RA,tr ≥ 35 dB", "Acoustic_Attenuation", ("RA,tr", "≥", "35 dB")),
        ("R = 1.46 W/m²°C", "Thermic_Coefficient", ("R", "=", "1.46 W/m²°C")),
        ("Uw <= 1.3 W/m².K", "Thermic_Coefficient", ("Uw", "≤", "1.3 W/m².K")),
        ("Rw >= 30 dB", "Acoustic_Attenuation", ("Rw", "≥", "30 dB")),
        ("93×225 cm", "Dimension", ("Dimension", "none", "93×225 cm")),
    ],
)
def test_triplets(surface, label, triplet):
    assert parse_property_triplet(surface, label) == triplet
    assert parse_property_triplet(EntitySpan(label, 0, len(surface), surface)) == triplet


def _write_cfg(tmp_path, body):
    path = tmp_path / "p.cfg"
    path.write_text(body)
    return path


def test_config_defaults_and_paths(tmp_path):
    (tmp_path / "c.jsonl").write_text("")
    cfg = PipelineConfig.from_file(_write_cfg(tmp_path, "[meta]\nversion = 1\n[re]\ntrain_corpus = c.jsonl ; comment\n"))
    assert cfg.re_train_corpus == tmp_path / "c.jsonl"
    assert cfg.threshold == 5 and cfg.ner_engine == "rules" and cfg.re_combination == 3


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("[ner]\nengine = rules\n", "version"),
        ("[meta]\nversion = 2\n", "version"),
        ("[meta]\nversion = 1\n[ner]\nengine = spacy\n", "engine"),
        ("[meta]\nversion = 1\n[ner]\nengine = crf\n", "crf_model"),
        ("[meta]\nversion = 1\n[ner]\nrules = missing.json\n", "not found"),
        ("[meta]\nversion = 1\n[re]\ncombination = 9\n", "combination"),
        ("[meta]\nversion = 1\n[re]\nparams = {bad\n", "p.cfg"),
        ("[meta]\nversion = 1\n[preprocess]\nthreshold = five\n", "p.cfg"),
        ("not ini", "p.cfg"),
    ],
)
def test_config_errors(tmp_path, body, fragment):
    with pytest.raises(ConfigError, match=fragment):
        PipelineConfig.from_file(_write_cfg(tmp_path, body))


def test_assembly_groups_rejects_and_dedups():
    text = "porte EI 30 et porte 1 vantail, fenêtre EI 30"
    raw = RawRequirement("d#0", "Portes", ["Portes"], text)
    door1, door2 = EntitySpan("Door", 0, 5, "porte"), EntitySpan("Door", 15, 20, "porte")
    fire = EntitySpan("Fire_Resistance", 6, 11, "EI 30")
    leaf = EntitySpan("Number_of_Leaf", 21, 30, "1 vantail")
    window = EntitySpan("Window", 32, 39, "fenêtre")
    fire2 = EntitySpan("Fire_Resistance", 40, 45, "EI 30")
    predictions = [
        (door1, fire, "hasFireResistance"),
        (door2, fire, "hasFireResistance"),   # duplicate triplet for the same concept
        (door2, leaf, "hasNumberOfLeaf"),
        (window, fire2, "hasDimension"),      # type does not fit the property
        (window, leaf, "0"),
    ]
    warnings = []
    reqs = assemble_requirements(raw, [door1, door2, window, fire, leaf, fire2], predictions, warnings)
    assert [(r.concept_label, len(r.relations)) for r in reqs] == [("Door", 2), ("Window", 0)]
    assert reqs[0].concept_spans == [(0, 5), (15, 20)]
    assert [r.key() for r in reqs[0].relations] == [
        ("hasFireResistance", "Fire_Resistance", "none", "EI 30"),
        ("hasNumberOfLeaf", "Number_of_Leaf", "none", "1 vantail"),
    ]
    assert len(warnings) == 1 and "rejected hasDimension" in warnings[0]


def test_ner_engine_dedups_and_sorts():
    spans = NerEngine()("Fenêtre RA,tr ≥ 35 dB et fenêtre")
    assert [s.label for s in spans] == ["Window", "Acoustic_Attenuation", "Window"]
    with pytest.raises(ConfigError):
        NerEngine("crf")


def test_segment_demo_document():
    seg = segment_document(load_document(DEMO_DOCUMENTS[0]))
    assert seg.toc_region is not None
    assert seg.requirements and all(r.text for r in seg.requirements)
    toc_pages = set(range(seg.toc_region[0], seg.toc_region[1] + 1))
    assert not toc_pages & {p.index for p in seg.clean.pages}


@pytest.fixture(scope="module")
def extractor():
    return Extractor(PipelineConfig.from_file(DEMO_CONFIG))


def test_extract_is_schema_valid(extractor):
    schema = json.loads(data_path("requirements.schema.json").read_text())
    for path in DEMO_DOCUMENTS:
        result = extractor.extract(load_document(path)).to_dict()
        jsonschema.validate(result, schema)
        assert result["raw_requirements"] > 0


def test_schema_rejects_bad_operator(extractor):
    schema = json.loads(data_path("requirements.schema.json").read_text())
    result = extractor.extract(load_document(DEMO_DOCUMENTS[0])).to_dict()
    rel = next(rel for req in result["requirements"] for rel in req["relations"])
    rel["property"]["operator"] = "~"
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(result, schema)


def test_extractor_needs_relation_source():
    with pytest.raises(ConfigError, match="model or train_corpus"):
        Extractor(PipelineConfig())
