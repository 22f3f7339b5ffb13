import json
from datetime import date

import pytest

from litminer import DateRange, Document, build_index

SIX_DOCS = [
    Document("d1", "alpha protein regulates the stem cell niche", date(2001, 3, 10)),
    Document("d2", "the alpha factor and stem cell renewal", date(2002, 7, 21)),
    Document("d3", "alpha with beta in stem cell culture", date(2003, 11, 5)),
    Document("d4", "beta signaling in embryo development", date(2004, 6, 30)),
    Document("d5", "beta oscillations in cortex", date(2005, 2, 14)),
    Document("d6", "clinical beta blockade trial", date(2006, 9, 1)),
]

FULL_RANGE = DateRange(date(1900, 1, 1), date(2017, 12, 31))


@pytest.fixture
def six_documents():
    return list(SIX_DOCS)


@pytest.fixture
def six_index():
    return build_index(SIX_DOCS, corpus_name="six")


@pytest.fixture
def full_range():
    return FULL_RANGE


@pytest.fixture
def six_corpus_file(tmp_path):
    path = tmp_path / "six.jsonl"
    lines = [
        json.dumps({"id": d.doc_id, "date": d.pub_date.isoformat(), "text": d.text})
        for d in SIX_DOCS
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
