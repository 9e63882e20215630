import numpy as np
import pytest

from cpfield.grid import FieldTensor, GridSpec


@pytest.fixture
def tiny_spec():
    return GridSpec(t_out=2, nx=3, ny=4, nvar=2,
                    variable_names=("u", "v"),
                    lead_hours=(1.0, 2.0))


@pytest.fixture
def one_cell_spec():
    return GridSpec(t_out=1, nx=1, ny=1, nvar=1,
                    variable_names=("u",), lead_hours=(1.0,))


def make_tensor(spec: GridSpec, fill=None, rng=None) -> FieldTensor:
    if fill is not None:
        return FieldTensor(spec, np.full(spec.shape, float(fill)))
    rng = rng or np.random.default_rng(0)
    return FieldTensor(spec, rng.normal(size=spec.shape))


@pytest.fixture
def make_field():
    return make_tensor
