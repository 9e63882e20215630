"""Tests for the grid data model and flat cell indexing."""

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from cpfield.grid import CalibrationSet, FieldTensor, GridSpec, cell_index

from conftest import make_tensor


# -------------------------------------------------------------------
# GridSpec
# -------------------------------------------------------------------

def test_gridspec_valid(tiny_spec):
    assert tiny_spec.shape == (2, 3, 4, 2)
    assert tiny_spec.n_cells == 48


@pytest.mark.parametrize("field,value", [
    ("t_out", 0), ("nx", 0), ("ny", -1), ("nvar", 0),
])
def test_gridspec_rejects_bad_dims(field, value):
    kwargs = dict(t_out=1, nx=1, ny=1, nvar=1, variable_names=("u",), lead_hours=(1.0,))
    kwargs[field] = value
    if field == "nvar":
        kwargs["variable_names"] = ()
    with pytest.raises(ValueError, match=">= 1"):
        GridSpec(**kwargs)


def test_gridspec_rejects_duplicate_names():
    with pytest.raises(ValueError, match="unique"):
        GridSpec(1, 1, 1, 2, ("u", "u"), (1.0,))


def test_gridspec_rejects_wrong_name_count():
    with pytest.raises(ValueError, match="variable_names"):
        GridSpec(1, 1, 1, 2, ("u",), (1.0,))


def test_gridspec_rejects_nonincreasing_lead_hours():
    with pytest.raises(ValueError, match="strictly increasing"):
        GridSpec(2, 1, 1, 1, ("u",), (2.0, 2.0))


def test_gridspec_sidecar_round_trip(tiny_spec):
    assert GridSpec.from_sidecar(tiny_spec.to_sidecar()) == tiny_spec


# -------------------------------------------------------------------
# cell_index
# -------------------------------------------------------------------

def test_cell_index_origin(tiny_spec):
    assert cell_index(tiny_spec, 0, 0, 0, 0) == 0


def test_cell_index_last_element():
    spec = GridSpec(2, 3, 4, 5, tuple("abcde"), (1.0, 2.0))
    assert cell_index(spec, 1, 2, 3, 4) == 119


def test_cell_index_hand_evaluated():
    # ((0*3 + 1)*4 + 2)*5 + 3 = 33
    spec = GridSpec(2, 3, 4, 5, tuple("abcde"), (1.0, 2.0))
    assert cell_index(spec, 0, 1, 2, 3) == 33


def test_cell_index_is_a_bijection():
    spec = GridSpec(2, 3, 4, 5, tuple("abcde"), (1.0, 2.0))
    seen = {
        cell_index(spec, t, x, y, v)
        for t in range(2) for x in range(3) for y in range(4) for v in range(5)
    }
    assert seen == set(range(120))


def test_cell_index_matches_numpy_ravel():
    spec = GridSpec(2, 3, 4, 5, tuple("abcde"), (1.0, 2.0))
    arr = np.arange(120).reshape(spec.shape)
    assert cell_index(spec, 1, 0, 3, 2) == arr[1, 0, 3, 2]


@pytest.mark.parametrize("idx", [(-1, 0, 0, 0), (2, 0, 0, 0), (0, 3, 0, 0), (0, 0, 4, 0), (0, 0, 0, 5)])
def test_cell_index_out_of_range(idx):
    spec = GridSpec(2, 3, 4, 5, tuple("abcde"), (1.0, 2.0))
    with pytest.raises(IndexError, match="out of range"):
        cell_index(spec, *idx)


# -------------------------------------------------------------------
# FieldTensor
# -------------------------------------------------------------------

def test_field_tensor_shape_mismatch(tiny_spec):
    with pytest.raises(ValueError, match="shape"):
        FieldTensor(tiny_spec, np.zeros((2, 3, 4, 3)))


def test_field_tensor_rejects_nan_with_flat_index(tiny_spec):
    data = np.zeros(tiny_spec.shape)
    data[1, 2, 0, 1] = np.nan
    flat = cell_index(tiny_spec, 1, 2, 0, 1)
    with pytest.raises(ValueError, match=f"flat index {flat}"):
        FieldTensor(tiny_spec, data)


def test_field_tensor_rejects_inf(tiny_spec):
    data = np.zeros(tiny_spec.shape)
    data[0, 0, 0, 0] = np.inf
    with pytest.raises(ValueError, match="non-finite"):
        FieldTensor(tiny_spec, data)


def test_field_tensor_is_immutable(tiny_spec):
    t = make_tensor(tiny_spec)
    with pytest.raises(ValueError, match="read-only"):
        t.data[0, 0, 0, 0] = 1.0
    with pytest.raises(AttributeError):
        t.spec = tiny_spec


def test_field_tensor_does_not_mutate_caller_array(tiny_spec):
    arr = np.zeros(tiny_spec.shape)
    FieldTensor(tiny_spec, arr)
    arr[0, 0, 0, 0] = 5.0  # caller's array stays writable


def test_field_tensor_equality(tiny_spec):
    a = make_tensor(tiny_spec, fill=1.5)
    b = make_tensor(tiny_spec, fill=1.5)
    c = make_tensor(tiny_spec, fill=2.0)
    assert a == b
    assert a != c


def test_field_tensor_value_at(tiny_spec):
    arr = np.arange(48, dtype=float).reshape(tiny_spec.shape)
    t = FieldTensor(tiny_spec, arr)
    assert t.value_at(1, 2, 3, 1) == arr[1, 2, 3, 1]


# -------------------------------------------------------------------
# CalibrationSet
# -------------------------------------------------------------------

def test_calibration_set_deterministic(tiny_spec):
    truths = [make_tensor(tiny_spec, fill=i) for i in range(3)]
    preds = [make_tensor(tiny_spec, fill=0.0) for _ in range(3)]
    calib = CalibrationSet(truths=truths, predictions=preds)
    assert calib.n == 3
    assert not calib.is_probabilistic
    assert calib.spec == tiny_spec


def test_calibration_set_probabilistic(tiny_spec):
    truths = [make_tensor(tiny_spec, fill=1.0)]
    means = [make_tensor(tiny_spec, fill=0.0)]
    sigmas = [make_tensor(tiny_spec, fill=2.0)]
    calib = CalibrationSet(truths=truths, means=means, sigmas=sigmas)
    assert calib.is_probabilistic


def test_calibration_set_requires_exactly_one_form(tiny_spec):
    truths = [make_tensor(tiny_spec)]
    with pytest.raises(ValueError, match="either predictions"):
        CalibrationSet(truths=truths)
    with pytest.raises(ValueError, match="either predictions"):
        CalibrationSet(
            truths=truths,
            predictions=truths,
            means=truths,
            sigmas=[make_tensor(tiny_spec, fill=1.0)],
        )


def test_calibration_set_needs_both_mean_and_sigma(tiny_spec):
    truths = [make_tensor(tiny_spec)]
    with pytest.raises(ValueError, match="both means and sigmas"):
        CalibrationSet(truths=truths, means=truths)


def test_calibration_set_rejects_negative_sigma(tiny_spec):
    truths = [make_tensor(tiny_spec)]
    with pytest.raises(ValueError, match="negative"):
        CalibrationSet(truths=truths, means=truths,
                       sigmas=[make_tensor(tiny_spec, fill=-1.0)])


def test_calibration_set_rejects_mixed_specs(tiny_spec, one_cell_spec):
    with pytest.raises(ValueError, match="different GridSpec"):
        CalibrationSet(
            truths=[make_tensor(tiny_spec)],
            predictions=[make_tensor(one_cell_spec)],
        )


def test_calibration_set_rejects_length_mismatch(tiny_spec):
    with pytest.raises(ValueError, match="expected n=2"):
        CalibrationSet(
            truths=[make_tensor(tiny_spec), make_tensor(tiny_spec)],
            predictions=[make_tensor(tiny_spec)],
        )


@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3), st.integers(1, 3))
@settings(max_examples=25, deadline=None)
def test_cell_index_bijection_property(t_out, nx, ny, nvar):
    spec = GridSpec(t_out, nx, ny, nvar,
                    tuple(f"v{i}" for i in range(nvar)),
                    tuple(float(i + 1) for i in range(t_out)))
    flat = [
        cell_index(spec, t, x, y, v)
        for t in range(t_out) for x in range(nx) for y in range(ny) for v in range(nvar)
    ]
    assert flat == list(range(spec.n_cells))
