"""Generate the shipped demo corpus: page-lines documents plus the annotated JSONL.

Each document is written as sections of hand-annotated paragraphs. The script
renders pages (cover, table of contents, running header and footer, a figure
page, a blank page), runs the library's own cleaning and segmentation on them,
and maps the gold annotations onto the raw requirements it gets back. It
fails loudly if segmentation or the packs disagree with the hand-written gold.

Usage: python scripts/build_demo_corpus.py [--out src/specreq/data/demo]
"""

from __future__ import annotations

import argparse
import json
import textwrap
from dataclasses import dataclass, field
from pathlib import Path

from specreq.annotations import AnnotatedSample, EntitySpan, RelationAnnotation, save_jsonl
from specreq.docmodel import document_from_dict
from specreq.ner.matchers import DictionaryPack, RulePack, dict_match, rule_match
from specreq.pipeline import segment_document

LINE_WIDTH = 78
LINES_PER_PAGE = 9


@dataclass
class Para:
    text: str
    entities: list[tuple[str, str]] = field(default_factory=list)       # (surface, label) in text order
    relations: list[tuple[int, int, str]] = field(default_factory=list)  # (concept idx, property idx, type)


@dataclass
class Figure:
    caption: str


@dataclass
class Section:
    number: str
    title: str
    body: list = field(default_factory=list)


@dataclass
class DemoDoc:
    doc_id: str
    lot: str
    project: str
    sections: list[Section]
    with_toc: bool = True


DOCS = [
    DemoDoc(
        "cctp_lot05_menuiseries_ext",
        "Lot 05 - Menuiseries extérieures",
        "Résidence Les Tilleuls",
        [
            Section("1", "Généralités", [
                Para("Le présent lot comprend la fourniture et la pose des menuiseries extérieures.",
                     [("menuiseries", "Joinery")]),
            ]),
            Section("1.1", "Normes", [
                Para("Les ouvrages respecteront les normes en vigueur et les avis techniques."),
            ]),
            Section("1.2", "Classement", [
                Para("Les menuiseries présenteront un classement A*3 E*7B V*A2.",
                     [("menuiseries", "Joinery"), ("A*3", "Air_Permeability"), ("E*7B", "Watertight"),
                      ("V*A2", "Wind_Resistance")],
                     [(0, 1, "hasAirPermeability"), (0, 2, "hasWatertight"), (0, 3, "hasWindResistance")]),
            ]),
            Section("2", "Fenêtres", [
                Para("Les fenêtres seront en aluminium à rupture de pont thermique.",
                     [("fenêtres", "Window")]),
            ]),
            Section("2.1", "Fenêtres des chambres", [
                Para("Fourniture et pose d'une fenêtre à deux vantaux de dimensions 120x135 cm.",
                     [("fenêtre", "Window"), ("deux vantaux", "Number_of_Leaf"), ("120x135 cm", "Dimension")],
                     [(0, 1, "hasNumberOfLeaf"), (0, 2, "hasDimension")]),
                Para("La fenêtre assurera un affaiblissement acoustique RA,tr ≥ 35 dB.",
                     [("fenêtre", "Window"), ("RA,tr ≥ 35 dB", "Acoustic_Attenuation")],
                     [(0, 1, "hasAcousticAttenuation")]),
            ]),
            Section("2.2", "Portes-fenêtres du séjour", [
                Para("La porte-fenêtre aura un coefficient R=1.46 W/m²°C et des dimensions 0,83 × 2,19 m.",
                     [("porte-fenêtre", "French_Door"), ("R=1.46 W/m²°C", "Thermic_Coefficient"),
                      ("0,83 × 2,19 m", "Dimension")],
                     [(0, 1, "hasThermicCoefficient"), (0, 2, "hasDimension")]),
                Figure("Figure 1 : Coupe de principe du seuil"),
            ]),
            Section("3", "Portes extérieures", [
                Para("Les ouvrages de ce chapitre concernent les accès du bâtiment."),
            ]),
            Section("3.1", "Porte d'entrée", [
                Para("Fourniture et pose d'une porte vitrée de dimensions 100×220 à un vantail.",
                     [("porte", "Door"), ("100×220", "Dimension"), ("un vantail", "Number_of_Leaf")],
                     [(0, 1, "hasDimension"), (0, 2, "hasNumberOfLeaf")]),
                Para("Le coefficient de la porte sera Ud ≤ 1,5 W/m².K.",
                     [("porte", "Door"), ("Ud ≤ 1,5 W/m².K", "Thermic_Coefficient")],
                     [(0, 1, "hasThermicCoefficient")]),
            ]),
        ],
    ),
    DemoDoc(
        "cctp_lot06_menuiseries_int",
        "Lot 06 - Menuiseries intérieures",
        "Collège Jean Moulin",
        [
            Section("1", "Dispositions générales", [
                Para("Les blocs-portes seront conformes au DTU 36.2.", [("blocs-portes", "Door_Assembly")]),
            ]),
            Section("1.1", "Blocs-portes coupe-feu", [
                Para("Les blocs-portes des locaux techniques seront coupe-feu 1/2 h.",
                     [("blocs-portes", "Door_Assembly"), ("coupe-feu 1/2 h", "Fire_Resistance")],
                     [(0, 1, "hasFireResistance")]),
                Para("Chaque bloc-porte aura des dimensions 93x204 cm.",
                     [("bloc-porte", "Door_Assembly"), ("93x204 cm", "Dimension")],
                     [(0, 1, "hasDimension")]),
            ]),
            Section("1.2", "Blocs-portes pare-flammes", [
                Para("Le bloc-porte de la gaine sera pare-flammes 1/2 h et de classe EI 30.",
                     [("bloc-porte", "Door_Assembly"), ("pare-flammes 1/2 h", "Flame_Arrester"),
                      ("EI 30", "Fire_Resistance")],
                     [(0, 1, "hasFlameArrester"), (0, 2, "hasFireResistance")]),
            ]),
            Section("2", "Portes de distribution", [
                Para("Les portes de distribution seront à âme pleine.", [("portes", "Door")]),
                Figure("Figure 2 : Détail de l'huisserie"),
            ]),
            Section("2.1", "Portes des bureaux", [
                Para("Les portes auront un affaiblissement Rw ≥ 30 dB et des dimensions 83x204 cm.",
                     [("portes", "Door"), ("Rw ≥ 30 dB", "Acoustic_Attenuation"), ("83x204 cm", "Dimension")],
                     [(0, 1, "hasAcousticAttenuation"), (0, 2, "hasDimension")]),
            ]),
            Section("2.2", "Portes des sanitaires", [
                Para("Les portes des sanitaires seront à un vantail de 73x204 cm.",
                     [("portes", "Door"), ("un vantail", "Number_of_Leaf"), ("73x204 cm", "Dimension")],
                     [(0, 1, "hasNumberOfLeaf"), (0, 2, "hasDimension")]),
            ]),
        ],
    ),
    DemoDoc(
        "cctp_lot04_facades",
        "Lot 04 - Façades et baies",
        "Médiathèque municipale",
        [
            Section("1", "Baies", [
                Para("Les baies seront équipées de châssis en aluminium laqué.",
                     [("baies", "Bay"), ("châssis", "Window_Sash")]),
            ]),
            Section("1.1", "Baies du rez-de-chaussée", [
                Para("Chaque baie aura des dimensions 240x220 cm et un coefficient Uw ≤ 1,3 W/m².K.",
                     [("baie", "Bay"), ("240x220 cm", "Dimension"), ("Uw ≤ 1,3 W/m².K", "Thermic_Coefficient")],
                     [(0, 1, "hasDimension"), (0, 2, "hasThermicCoefficient")]),
            ]),
            Section("1.2", "Châssis fixes", [
                Para("Les châssis fixes auront un classement A*4 E*9A V*C3.",
                     [("châssis", "Window_Sash"), ("A*4", "Air_Permeability"), ("E*9A", "Watertight"),
                      ("V*C3", "Wind_Resistance")],
                     [(0, 1, "hasAirPermeability"), (0, 2, "hasWatertight"), (0, 3, "hasWindResistance")]),
                Para("Les châssis auront des dimensions 60x120 cm.",
                     [("châssis", "Window_Sash"), ("60x120 cm", "Dimension")],
                     [(0, 1, "hasDimension")]),
            ]),
            Section("2", "Menuiseries de façade", [
                Para("Les menuiseries de façade seront à deux vantaux.",
                     [("menuiseries", "Joinery"), ("deux vantaux", "Number_of_Leaf")],
                     [(0, 1, "hasNumberOfLeaf")]),
            ]),
            Section("2.1", "Performance acoustique", [
                Para("Les menuiseries de façade assureront un isolement DnT,A ≥ 38 dB.",
                     [("menuiseries", "Joinery"), ("DnT,A ≥ 38 dB", "Acoustic_Attenuation")],
                     [(0, 1, "hasAcousticAttenuation")]),
            ]),
            Section("2.2", "Entretien", [
                Para("Le nettoyage des vitrages est à la charge du titulaire jusqu'à la réception."),
            ]),
        ],
    ),
    DemoDoc(
        "cctp_lot05_logements",
        "Lot 05 - Menuiseries des logements",
        "Ensemble de 24 logements",
        [
            Section("1", "Fenêtres et portes-fenêtres", [
                Para("Les fenêtres et les portes-fenêtres seront en PVC blanc.",
                     [("fenêtres", "Window"), ("portes-fenêtres", "French_Door")]),
            ]),
            Section("1.1", "Fenêtres des logements", [
                Para("Les fenêtres auront un coefficient Uw = 1,4 W/m².K.",
                     [("fenêtres", "Window"), ("Uw = 1,4 W/m².K", "Thermic_Coefficient")],
                     [(0, 1, "hasThermicCoefficient")]),
                Para("Chaque fenêtre sera de type oscillo-battant à un vantail.",
                     [("fenêtre", "Window"), ("un vantail", "Number_of_Leaf")],
                     [(0, 1, "hasNumberOfLeaf")]),
            ]),
            Section("1.2", "Portes-fenêtres des logements", [
                Para("Les portes-fenêtres seront à deux vantaux et auront un affaiblissement RA,tr ≥ 32 dB.",
                     [("portes-fenêtres", "French_Door"), ("deux vantaux", "Number_of_Leaf"),
                      ("RA,tr ≥ 32 dB", "Acoustic_Attenuation")],
                     [(0, 1, "hasNumberOfLeaf"), (0, 2, "hasAcousticAttenuation")]),
                Para("Chaque porte-fenêtre aura un classement A*3 E*5B V*A2.",
                     [("porte-fenêtre", "French_Door"), ("A*3", "Air_Permeability"), ("E*5B", "Watertight"),
                      ("V*A2", "Wind_Resistance")],
                     [(0, 1, "hasAirPermeability"), (0, 2, "hasWatertight"), (0, 3, "hasWindResistance")]),
            ]),
            Section("2", "Portes palières", [
                Para("Les ouvrages de ce chapitre sont posés par le titulaire du présent lot."),
            ]),
            Section("2.1", "Porte palière", [
                Para("La porte palière sera pare-flammes 1/2 h avec un affaiblissement Rw ≥ 39 dB.",
                     [("porte", "Door"), ("pare-flammes 1/2 h", "Flame_Arrester"),
                      ("Rw ≥ 39 dB", "Acoustic_Attenuation")],
                     [(0, 1, "hasFlameArrester"), (0, 2, "hasAcousticAttenuation")]),
            ]),
        ],
    ),
    DemoDoc(
        "cctp_lot07_erp",
        "Lot 07 - Menuiseries ERP",
        "Salle polyvalente",
        [
            Section("1", "Issues de secours", [
                Para("Les blocs-portes des issues de secours seront à deux vantaux.",
                     [("blocs-portes", "Door_Assembly"), ("deux vantaux", "Number_of_Leaf")],
                     [(0, 1, "hasNumberOfLeaf")]),
            ]),
            Section("1.1", "Résistance au feu", [
                Para("Les blocs-portes seront coupe-feu 1 h et de dimensions 180x220 cm.",
                     [("blocs-portes", "Door_Assembly"), ("coupe-feu 1 h", "Fire_Resistance"),
                      ("180x220 cm", "Dimension")],
                     [(0, 1, "hasFireResistance"), (0, 2, "hasDimension")]),
            ]),
            Section("1.2", "Portes du hall", [
                Para("La porte du hall aura des dimensions 140x240 cm et sera CF 1/2 h.",
                     [("porte", "Door"), ("140x240 cm", "Dimension"), ("CF 1/2 h", "Fire_Resistance")],
                     [(0, 1, "hasDimension"), (0, 2, "hasFireResistance")]),
            ]),
            Section("2", "Baies vitrées", []),
            Section("2.1", "Baies du hall", [
                Para("Les baies du hall auront un coefficient Uw ≤ 1,6 W/m².K et un classement A*4 E*7B V*A3.",
                     [("baies", "Bay"), ("Uw ≤ 1,6 W/m².K", "Thermic_Coefficient"), ("A*4", "Air_Permeability"),
                      ("E*7B", "Watertight"), ("V*A3", "Wind_Resistance")],
                     [(0, 1, "hasThermicCoefficient"), (0, 2, "hasAirPermeability"), (0, 3, "hasWatertight"),
                      (0, 4, "hasWindResistance")]),
            ]),
        ],
        with_toc=False,
    ),
]


def _paragraph_lines(text: str) -> list[str]:
    return textwrap.wrap(text, LINE_WIDTH, break_long_words=False, break_on_hyphens=False)


def render(doc: DemoDoc) -> dict:
    """Lay the sections out on pages and add cover, TOC, header/footer, blank and figure pages."""
    # body blocks: (lines, is_figure)
    blocks: list[tuple[list[str], bool]] = []
    for section in doc.sections:
        blocks.append(([f"{section.number} {section.title}"], False))
        for item in section.body:
            if isinstance(item, Figure):
                blocks.append(([item.caption], True))
            else:
                blocks.append((_paragraph_lines(item.text) + [""], False))

    bodies: list[tuple[list[str], bool]] = []
    current: list[str] = []
    for lines, is_figure in blocks:
        if is_figure:
            if current:
                bodies.append((current, False))
                current = []
            bodies.append((lines + [""], True))
            continue
        if current and len(current) + len(lines) > LINES_PER_PAGE:
            bodies.append((current, False))
            current = []
        current.extend(lines)
    if current:
        bodies.append((current, False))

    pages_meta: list[tuple[str, list[str]]] = [("cover", [
        "CAHIER DES CLAUSES TECHNIQUES PARTICULIÈRES",
        "",
        doc.lot,
        doc.project,
        "Dossier de consultation des entreprises",
    ])]
    if doc.with_toc:
        toc = ["SOMMAIRE", ""]
        toc += [f"{s.number} {s.title} {'.' * max(4, 50 - len(s.title))} {3}" for s in doc.sections]
        pages_meta.append(("text", toc))
    for i, (lines, is_figure) in enumerate(bodies):
        pages_meta.append(("figure" if is_figure else "text", lines))
        if i == 1:
            pages_meta.append(("blank", ["", ""]))

    total = len(pages_meta)
    header = f"CCTP {doc.lot}"
    pages = []
    for index, (kind, lines) in enumerate(pages_meta):
        if kind == "text":
            lines = [header, ""] + lines + (["", f"Page {index + 1} / {total}"] if lines[-1] else [f"Page {index + 1} / {total}"])
        pages.append({"index": index, "lines": lines, "has_figure": kind == "figure"})
    return {"doc_id": doc.doc_id, "pages": pages}


def _locate(text: str, surface: str, start: int) -> int:
    pos = text.find(surface, start)
    if pos < 0:
        raise SystemExit(f"surface {surface!r} not found in {text!r}")
    return pos


def annotate(doc: DemoDoc, rendered: dict, counter: list[int]) -> list[AnnotatedSample]:
    seg = segment_document(document_from_dict(rendered))
    expected_toc = doc.with_toc
    if bool(seg.toc_region) != expected_toc:
        raise SystemExit(f"{doc.doc_id}: TOC detection {seg.toc_region} (expected present={expected_toc})")
    if len(seg.clean.provenance.header_footer.detected_lines) != 2:
        raise SystemExit(f"{doc.doc_id}: header/footer detection {seg.clean.provenance.header_footer.detected_lines}")

    section_by_title = {s.title: s for s in doc.sections}
    samples = []
    for raw in seg.requirements:
        chain = [section_by_title[t] for t in raw.hierarchy_path]
        items = [item for s in chain for item in s.body]
        texts = [item.caption if isinstance(item, Figure) else item.text for item in items]
        if raw.text != "\n".join(texts):
            raise SystemExit(f"{raw.req_id}: text mismatch\n{raw.text!r}\n{chr(10).join(texts)!r}")
        entities: list[EntitySpan] = []
        relations: list[RelationAnnotation] = []
        offset = 0
        for item, text in zip(items, texts):
            if isinstance(item, Para):
                ids = []
                cursor = 0
                for surface, label in item.entities:
                    pos = _locate(text, surface, cursor)
                    cursor = pos + len(surface)
                    counter[0] += 1
                    span = EntitySpan(label, offset + pos, offset + cursor, surface=surface, id=counter[0])
                    entities.append(span)
                    ids.append(span.id)
                for c, p, rel_type in item.relations:
                    counter[1] += 1
                    relations.append(RelationAnnotation(f"R{counter[1]}", ids[c], ids[p], rel_type))
            offset += len(text) + 1
        samples.append(AnnotatedSample(raw.req_id, raw.text, entities, relations, title=raw.title))
    return samples


def check_packs(samples: list[AnnotatedSample]) -> None:
    dictionary, rules = DictionaryPack.default(), RulePack.default()
    for s in samples:
        predicted = {e.key for e in dict_match(s.text, dictionary) + rule_match(s.text, rules)}
        gold = {e.key for e in s.entities}
        if predicted != gold:
            raise SystemExit(f"{s.id}: packs disagree with gold\n extra={predicted - gold}\n missing={gold - predicted}")


DEMO_CFG = """\
; demo pipeline configuration (INI, versioned by [meta] version)
[meta]
version = 1

[preprocess]
threshold = 5

[segment]
toc_max_pages = 5
toc_min_ratio = 0.6
toc_max_distance = 5

[ner]
engine = rules

[re]
train_corpus = corpus.jsonl
kind = rf
combination = 3
params = {"n_estimators": 50, "max_depth": 30, "min_samples_split": 2}

[split]
seed = 13
"""


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/specreq/data/demo"))
    args = parser.parse_args()
    out = Path(args.out)
    (out / "documents").mkdir(parents=True, exist_ok=True)

    counter = [0, 0]
    samples: list[AnnotatedSample] = []
    for doc in DOCS:
        rendered = render(doc)
        (out / "documents" / f"{doc.doc_id}.json").write_text(
            json.dumps(rendered, ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
        )
        samples.extend(annotate(doc, rendered, counter))
    check_packs(samples)
    save_jsonl(samples, out / "corpus.jsonl")
    (out / "demo.cfg").write_text(DEMO_CFG, encoding="utf-8")
    n_entities = sum(len(p.entities) for d in DOCS for s in d.sections for p in s.body if isinstance(p, Para))
    print(f"{len(DOCS)} documents, {len(samples)} raw requirements, {n_entities} distinct gold entities")


if __name__ == "__main__":
    main()
