import math

import pytest

import learn2mix


def test_mixing_update_and_apportionment():
    alpha = learn2mix.update_mixing([0.5, 0.5], [1.0, 3.0], 0.5)
    assert alpha == pytest.approx([0.375, 0.625], abs=1e-15)
    assert learn2mix.allocate_counts([0.5, 0.3, 0.2], 10) == [5, 3, 2]


def test_cursor_wraps():
    cursor = learn2mix.CyclicCursor([3, 2])
    assert cursor.next_batch([2, 3]) == [(0, 0), (0, 1), (1, 0), (1, 1), (1, 0)]
    assert cursor.offsets == [2, 1]


def test_mean_estimation_shapes():
    train, test = learn2mix.make_mean_estimation(0)
    assert train.class_sizes() == [1000, 1000, 800, 200]
    assert test.size == 4000
    assert math.isclose(sum(train.fixed_proportions), 1.0)


def test_verify_theory_report():
    report = learn2mix.verify_theory(0)
    assert report["passed"]
    assert report["convergence"]["envelope_violations"] == 0
    assert 0.0 <= report["step_comparison"]["hold_fraction"] <= 1.0


def test_run_and_summarize(tmp_path):
    config = learn2mix.default_config("blobs")
    config.update(strategies=["learn2mix", "classical"], seeds=2, output_dir=str(tmp_path))
    config["train"].update(epochs=4, record_time=False)
    files = learn2mix.run(config)
    assert len(files) == 4
    rows = learn2mix.summarize(files)
    assert {r["strategy"] for r in rows} == {"learn2mix", "classical"}


def test_bad_strategy_raises():
    with pytest.raises(ValueError):
        learn2mix.run({"strategies": ["nope"]})
