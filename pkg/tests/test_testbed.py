"""Benchmark suite: instancing, optima, rotations, labels, manifest."""

import json

import numpy as np
import pytest

from elakit import testbed
from elakit.testbed import (
    DEFAULT_INSTANCE_SEEDS,
    PROPERTY_LEVELS,
    SUITE_FUNCTION_IDS,
    Bounds,
    PropertyLabels,
    evaluate,
    evaluate_batch,
    function_labels,
    make_instance,
    suite_manifest,
)


def test_suite_has_thirteen_functions_in_five_categories():
    assert len(SUITE_FUNCTION_IDS) == 13
    categories = {testbed.function_category(fid) for fid in SUITE_FUNCTION_IDS}
    assert categories == {
        "separable",
        "low_conditioning",
        "high_conditioning",
        "multimodal_strong",
        "multimodal_weak",
    }


def test_default_instance_seeds_are_one_through_fifteen():
    assert DEFAULT_INSTANCE_SEEDS == tuple(range(1, 16))


@pytest.mark.parametrize("fid", SUITE_FUNCTION_IDS)
@pytest.mark.parametrize("dim", [2, 3, 7])
def test_optimum_value_is_zero_at_the_shift(fid, dim):
    """f(x*) = 0 holds exactly for every function, dimension and seed."""
    for seed in (0, 1, 5):
        inst = make_instance(fid, dim, seed)
        value = evaluate(inst, inst.shift)
        assert abs(value) < 1e-9, (fid, dim, seed, value)


@pytest.mark.parametrize("fid", SUITE_FUNCTION_IDS)
def test_shift_is_interior_and_within_four(fid):
    inst = make_instance(fid, 6, 3)
    assert (np.abs(inst.shift) <= 4.0).all()
    assert (inst.shift > inst.bounds.lower).all()
    assert (inst.shift < inst.bounds.upper).all()


def test_canonical_instance_has_zero_shift_and_no_rotation():
    for fid in SUITE_FUNCTION_IDS:
        inst = make_instance(fid, 4, 0)
        assert np.all(inst.shift == 0.0)
        assert inst.rotation is None


def test_same_triple_gives_identical_values_on_probe_points():
    """Two descriptors with equal (id, dim, seed) define the same function."""
    rng = np.random.default_rng(11)
    probes = rng.uniform(-5, 5, size=(100, 5))
    for fid in SUITE_FUNCTION_IDS:
        a = make_instance(fid, 5, 7)
        b = make_instance(fid, 5, 7)
        assert np.array_equal(evaluate_batch(a, probes), evaluate_batch(b, probes))


def test_different_seeds_give_different_functions():
    rng = np.random.default_rng(12)
    probes = rng.uniform(-5, 5, size=(50, 4))
    a = make_instance(1, 4, 1)
    b = make_instance(1, 4, 2)
    assert not np.allclose(evaluate_batch(a, probes), evaluate_batch(b, probes))


def test_rotations_are_orthogonal():
    for fid in SUITE_FUNCTION_IDS:
        inst = make_instance(fid, 8, 2)
        if inst.rotation is None:
            continue
        r = inst.rotation
        assert np.abs(r.T @ r - np.eye(8)).max() <= 1e-10
        assert abs(abs(np.linalg.det(r)) - 1.0) < 1e-9


def test_separable_functions_are_never_rotated():
    for fid in (1, 2, 3):
        for seed in (1, 2, 9):
            assert make_instance(fid, 5, seed).rotation is None


def test_rotated_evaluation_matches_hand_composed_oracle():
    """Rotated evaluation equals rotating first, then the canonical base."""
    rng = np.random.default_rng(4)
    x = rng.uniform(-4, 4, size=(40, 6))
    inst = make_instance(5, 6, 3)  # rotated rosenbrock
    base = make_instance(5, 6, 0)  # canonical: zero shift, no rotation
    composed = evaluate_batch(base, (x - inst.shift) @ inst.rotation.T)
    direct = evaluate_batch(inst, x)
    assert np.allclose(direct, composed, rtol=1e-12, atol=1e-12)


def test_sphere_unit_offset_value_is_one():
    inst = make_instance(1, 4, 2)
    x = inst.shift.copy()
    x[0] += 1.0
    assert abs(evaluate(inst, x) - 1.0) < 1e-12


def test_evaluate_batch_is_pure():
    inst = make_instance(9, 3, 1)
    pts = np.random.default_rng(0).uniform(-5, 5, (20, 3))
    before = pts.copy()
    first = evaluate_batch(inst, pts)
    second = evaluate_batch(inst, pts)
    assert np.array_equal(pts, before)
    assert np.array_equal(first, second)


def test_evaluate_rejects_bad_input():
    inst = make_instance(1, 3, 1)
    with pytest.raises(ValueError):
        evaluate(inst, np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        evaluate(inst, np.array([1.0, np.nan, 0.0]))
    with pytest.raises(ValueError):
        evaluate_batch(inst, np.ones((4, 2)))


def test_make_instance_rejects_bad_arguments():
    with pytest.raises(ValueError):
        make_instance(99, 3, 1)
    with pytest.raises(ValueError):
        make_instance(1, 1, 1)


def test_labels_depend_on_function_id_only():
    for fid in SUITE_FUNCTION_IDS:
        expected = function_labels(fid)
        for dim in (2, 9):
            for seed in (0, 4):
                assert make_instance(fid, dim, seed).labels == expected


def test_labels_use_declared_levels_and_all_properties():
    for fid in SUITE_FUNCTION_IDS:
        labels = function_labels(fid).as_dict()
        assert set(labels) == set(PROPERTY_LEVELS)
        for prop, value in labels.items():
            assert value in PROPERTY_LEVELS[prop]


def test_every_property_has_at_least_two_classes_across_the_suite():
    """Each classification task must be non-trivial over the suite."""
    for prop in PROPERTY_LEVELS:
        values = {getattr(function_labels(fid), prop) for fid in SUITE_FUNCTION_IDS}
        assert len(values) >= 2, prop


def test_property_labels_validate_levels():
    with pytest.raises(ValueError):
        PropertyLabels("nope", "strong", "high", "none", "high", "none", "none")


def test_bounds_validation():
    with pytest.raises(ValueError):
        Bounds(np.array([0.0, 0.0]), np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        Bounds(np.array([0.0]), np.array([np.inf]))
    box = Bounds.default_box(3)
    assert box.dimension == 3
    assert np.all(box.lower == -5.0) and np.all(box.upper == 5.0)


def test_suite_manifest_is_json_ready_and_complete():
    manifest = suite_manifest()
    text = json.dumps(manifest)
    back = json.loads(text)
    assert [row["function_id"] for row in back] == list(SUITE_FUNCTION_IDS)
    for row in back:
        assert set(row) == {"function_id", "name", "category", "labels"}
        assert set(row["labels"]) == set(PROPERTY_LEVELS)


def test_rastrigin_is_multimodal_on_a_line():
    """Many local minima along a coordinate: values oscillate."""
    inst = make_instance(3, 2, 0)
    ts = np.linspace(-4, 4, 801)
    pts = np.column_stack([ts, np.zeros_like(ts)])
    vals = evaluate_batch(inst, pts)
    sign_changes = np.sum(np.diff(np.sign(np.diff(vals))) != 0)
    assert sign_changes > 10
