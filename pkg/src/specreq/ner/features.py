"""Token feature templates for the CRF: four syntactic attributes over a 5-word window."""

from __future__ import annotations

import unicodedata
from typing import Any, Sequence

from specreq.textproc import Token

WINDOW = (-2, -1, 0, 1, 2)


def _strip_accents(word: str) -> str:
    decomposed = unicodedata.normalize("NFD", word)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def _word_features(token: Token, prefix: str, strip_accents: bool) -> dict[str, Any]:
    lower = token.surface.lower()
    if strip_accents:
        lower = _strip_accents(lower)
    return {
        f"<{prefix}word.lower()>": lower,
        f"<{prefix}word.length()>": len(token.surface),
        f"<{prefix}word.isdigit()>": token.surface.isdigit(),
        f"<{prefix}postag>": token.pos or "X",
    }


def crf_features(tokens: Sequence[Token], index: int, strip_accents: bool = False) -> dict[str, Any]:
    """Feature map of ``tokens[index]`` and its neighbours at offsets -2..+2.

    Keys follow the ``<-1.word.lower()>`` convention; positions past either
    edge contribute a single ``<-1>: "BOS"`` / ``<+1>: "EOS"`` marker.
    """
    features: dict[str, Any] = {}
    for offset in WINDOW:
        j = index + offset
        prefix = "" if offset == 0 else f"{offset:+d}."
        if j < 0:
            features[f"<{offset:+d}>"] = "BOS"
        elif j >= len(tokens):
            features[f"<{offset:+d}>"] = "EOS"
        else:
            features.update(_word_features(tokens[j], prefix, strip_accents))
    return features


def feature_strings(features: dict[str, Any]) -> list[str]:
    return [f"{key}={value}" for key, value in features.items()]


def sequence_attributes(tokens: Sequence[Token], strip_accents: bool = False) -> list[list[str]]:
    return [feature_strings(crf_features(tokens, i, strip_accents)) for i in range(len(tokens))]
