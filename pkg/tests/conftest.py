import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from coherent_ecp.core import CoherentSuperposition  # noqa: E402

finite = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)


@st.composite
def small_states(draw, n_modes=None, max_terms=6):
    m = draw(st.integers(1, 4)) if n_modes is None else n_modes
    t = draw(st.integers(1, max_terms))
    coeffs = draw(st.lists(complexes, min_size=t, max_size=t))
    amps = draw(st.lists(st.lists(complexes, min_size=m, max_size=m), min_size=t, max_size=t))
    return CoherentSuperposition([f"m{k}" for k in range(m)], coeffs, amps)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
