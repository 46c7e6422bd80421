import numpy as np
import pytest

from weakchaos._kernels import available_implementations, get_kernels
from weakchaos.symbolic import SymbolString

#: the worked 30-symbol example used throughout the coding tests
REFERENCE_TEXT = "000100000000110010000000001101"
REFERENCE_DIGITS = (3, 8, 0, 2, 9, 0, 1)


@pytest.fixture(params=available_implementations())
def kernels(request):
    """Run a test against every importable kernel implementation."""
    return get_kernels(request.param)


@pytest.fixture
def reference_string():
    return SymbolString.from_text(REFERENCE_TEXT)


def random_symbol_strings(rng, count, max_len=512, alphabets=(2, 9)):
    out = []
    for _ in range(count):
        n = int(rng.integers(0, max_len + 1))
        alphabet = int(rng.integers(alphabets[0], alphabets[1]))
        out.append(SymbolString(
            rng.integers(0, alphabet, n).astype(np.int16), alphabet))
    return out
