from pathlib import Path

import pytest
from hypothesis import settings

from hatebench import corpus, synth, textprep

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def resources():
    return textprep.load_resources()


@pytest.fixture(scope="session")
def synth_corpus_path(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("data") / "synthetic.csv"
    synth.make_synthetic_corpus(400, seed=20250, path=path)
    return path


@pytest.fixture(scope="session")
def synth_records(synth_corpus_path):
    return corpus.load_corpus(synth_corpus_path)


@pytest.fixture(scope="session")
def synth_docs(synth_records, resources):
    return [textprep.preprocess(rec.text, resources) for rec in synth_records]


@pytest.fixture()
def tiny_table(tmp_path) -> Path:
    path = tmp_path / "tiny.csv"
    path.write_text(
        "Tweet,HS,Abusive\n"
        "RT USER: dasar BODOH!!,1,1\n"
        "cuaca hari ini panas,0,0\n"
        "km orang baik http://a.b,0,0\n",
        encoding="utf-8",
    )
    return path
