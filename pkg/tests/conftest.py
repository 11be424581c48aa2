import numpy as np
import pytest

from surromip.mip import CONTINUOUS, MipModel


@pytest.fixture
def unit_box():
    return [(-1.0, 1.0)] * 4


def build_input_model(box):
    """Fresh model holding only boxed input variables."""
    model = MipModel()
    xvars = [model.add_var(CONTINUOUS, lo, hi, f"in_{i}")
             for i, (lo, hi) in enumerate(box)]
    return model, xvars


def rng(seed):
    return np.random.default_rng(seed)
