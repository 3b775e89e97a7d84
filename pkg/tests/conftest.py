import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).resolve().parent
ROOT = TESTS.parent
PROBLEMS = ROOT / "problems"

if str(TESTS) not in sys.path:
    sys.path.insert(0, str(TESTS))

from lctrs.ari import parse_file, preprocess


def load(name: str, merge: bool = True):
    """Parse and preprocess one of the bundled .ari files."""
    return preprocess(parse_file(PROBLEMS / f"{name}.ari"), merge=merge)


@pytest.fixture(scope="session")
def corpus():
    """Shared random-system corpus for the oracle cross-checks."""
    import groundtruth

    return groundtruth.random_corpus(20260816, 210)
