from __future__ import annotations

import json
from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent.parent / "src" / "tippy" / "data"

GOLDEN_CONVERSATION = [
    "I would like you to propose a new COVID drug molecule based on Ensitrelvir.",
    "Yes. Please show me the first molecule's structure.",
    "Yes, synthesize the first molecule.",
    "Yes. Thank you, please schedule it to run ASAP.",
    "I have synthesized the molecule and I would like to check my results for yield and purity.",
    "Run it.",
    "How's that job doing?",
    "Yes please.",
    "No thanks, this looks great!",
]

TIPPY_ANALOG_1 = "CCN(CC(C)(C)C)c1ccc2c(=O)n(C)c(=O)n(C)c2n1"
TIPPY_ANALOG_2 = "CCN(CC(C)(C)C)c1nc2c(c(=O)n(C)c(=O)n2C)n1C"
TIPPY_ANALOG_3 = "CN(CCC(C)(C)C)c1nc2c(c(=O)n(C)c(=O)n2C)n1C"


@pytest.fixture(scope="session")
def smiles_corpus() -> list[str]:
    return json.loads((DATA_DIR / "smiles_corpus.json").read_text())


@pytest.fixture(scope="session")
def permuted_pairs() -> list[list[str]]:
    return json.loads((DATA_DIR / "smiles_permuted_pairs.json").read_text())


@pytest.fixture(scope="session")
def red_corpus() -> list[str]:
    return json.loads((DATA_DIR / "corpus_red.json").read_text())


@pytest.fixture(scope="session")
def benign_corpus() -> list[str]:
    return json.loads((DATA_DIR / "corpus_benign.json").read_text())


@pytest.fixture()
def runtime(tmp_path):
    from tippy.service.runtime import RuntimeConfig, TippyRuntime

    rt = TippyRuntime(RuntimeConfig(state_path=tmp_path / "events.jsonl"))
    yield rt
    rt.close()


def run_golden_conversation(rt) -> str:
    """Drive the full golden demo conversation; returns the session id."""
    session_id = rt.create_session()
    for message in GOLDEN_CONVERSATION:
        rt.handle_message(session_id, message)
    return session_id
