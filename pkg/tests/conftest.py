import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from advlab import Adversary


@pytest.fixture
def unfair_triple() -> Adversary:
    """The pinned 3-process family {{1},{2,3},{1,2,3}}: power 2, not fair."""
    return Adversary.of(3, [[1], [2, 3], [1, 2, 3]])


@pytest.fixture
def fair_nonstructured() -> Adversary:
    """All non-empty subsets of {1,2,3} except {1,2}: fair, yet neither
    symmetric nor superset-closed."""
    return Adversary.of(3, [[1], [2], [3], [1, 3], [2, 3], [1, 2, 3]])


@pytest.fixture
def one_resilient_3() -> Adversary:
    """Live sets of size >= 2 over three processes."""
    return Adversary.of(3, [[1, 2], [1, 3], [2, 3], [1, 2, 3]])
