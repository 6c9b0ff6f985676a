import math
import textwrap

import pytest

from eprsim import (
    DescriptorError,
    InvalidWeightsError,
    Station,
    UnknownZooEntryError,
    apply_transform_op,
    correlate,
    evaluate_outcome,
    load_model,
    load_schedule,
    make_model,
    s1,
    s2,
    zoo_model,
)
from eprsim.descriptors import descriptor_text

EXPLICIT = textwrap.dedent(
    """
    [model]
    name = handmade

    [source]
    states = g0, g1
    prior = 0.25, 0.75

    [grid]
    slots = 4

    [gen1]
    kind = table
    values = 0, 1
    table =
        1,0
        2,1
        3,0
        4,1

    [gen2]
    kind = constant
    value = 5

    [out1]
    kind = lambda_table
    table =
        g0,1
        g1,-1

    [out2]
    kind = cosine
    negate = true
    table =
        g0,0.0
        g1,1.5707963267948966
    """
)


def test_explicit_descriptor_builds_and_evaluates(tmp_path):
    path = tmp_path / "handmade.ini"
    path.write_text(EXPLICIT, encoding="utf-8")
    model = load_model(path)
    assert model.name == "handmade"
    assert model.gen1.evaluate(s1(0.1), 2) == 1
    assert model.gen2.evaluate(s2(0.1), 3) == 5
    assert evaluate_outcome(model, Station.S1, s1(0.0), "g0", 1) == 1
    assert evaluate_outcome(model, Station.S1, s1(0.0), "g1", 1) == -1
    # out2 = -sign(cos(b - offset)); for g0 at b=0 that is -1
    assert evaluate_outcome(model, Station.S2, s2(0.0), "g0", 1) == -1


def test_table_file_reference(tmp_path):
    (tmp_path / "gen1.csv").write_text("1,0\n2,1\n3,0\n4,1\n", encoding="utf-8")
    text = EXPLICIT.replace(
        "kind = table\nvalues = 0, 1\ntable =\n    1,0\n    2,1\n    3,0\n    4,1",
        "kind = table\nvalues = 0, 1\nfile = gen1.csv",
    )
    assert "file = gen1.csv" in text
    path = tmp_path / "model.ini"
    path.write_text(text, encoding="utf-8")
    model = load_model(path)
    assert model.gen1.evaluate(s1(0.0), 4) == 1


def test_angle_keyed_generator_table(tmp_path):
    text = textwrap.dedent(
        f"""
        [model]
        name = angle_keyed

        [source]
        states = x
        prior = 1.0

        [grid]
        slots = 2

        [gen1]
        kind = table
        values = 0, 1
        table =
            0.0,1,0
            0.0,2,1
            {math.pi / 4},1,1
            {math.pi / 4},2,0

        [gen2]
        kind = constant

        [out1]
        kind = constant
        value = 1

        [out2]
        kind = constant
        value = -1
        """
    )
    path = tmp_path / "angles.ini"
    path.write_text(text, encoding="utf-8")
    model = load_model(path)
    assert model.gen1.evaluate(s1(0.0), 1) == 0
    assert model.gen1.evaluate(s1(math.pi / 4), 1) == 1
    with pytest.raises(DescriptorError):
        model.gen1.evaluate(s1(1.0), 1)


def test_invalid_prior_in_descriptor_raises_model_error(tmp_path):
    text = EXPLICIT.replace("prior = 0.25, 0.75", "prior = 0.6, 0.6")
    path = tmp_path / "bad.ini"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(InvalidWeightsError):
        load_model(path)


def test_missing_sections_rejected(tmp_path):
    path = tmp_path / "partial.ini"
    path.write_text("[source]\nstates = a\nprior = 1.0\n", encoding="utf-8")
    with pytest.raises(DescriptorError, match="grid"):
        load_model(path)


def test_zoo_stub_descriptor(tmp_path):
    path = tmp_path / "stub.ini"
    path.write_text("[model]\nzoo = constant_plus\n", encoding="utf-8")
    model = load_model(path)
    assert model.name == "constant_plus"


def test_transform_section_applies_in_order(tmp_path):
    path = tmp_path / "t.ini"
    path.write_text(
        "[model]\nzoo = constant_plus\n\n[transform]\n"
        "op.1 = rademacher mean=0 seed=7\nop.2 = double\n",
        encoding="utf-8",
    )
    model = load_model(path)
    assert model.grid.slot_count == 8
    assert model.sign is not None
    assert model.flip_mask is not None
    assert correlate(model, s1(0.0), s2(0.0)).marginal_a == 0.0


def test_descriptor_text_round_trips_zoo_base(tmp_path):
    text = descriptor_text("constant_plus", ["rademacher mean=0 seed=3"])
    path = tmp_path / "out.ini"
    path.write_text(text, encoding="utf-8")
    model = load_model(path)
    assert model.sign is not None
    assert model.sign.mean == 0.0


def test_descriptor_text_appends_to_existing_transforms(tmp_path):
    first = descriptor_text("constant_plus", ["rademacher mean=0 seed=3"])
    path = tmp_path / "first.ini"
    path.write_text(first, encoding="utf-8")
    second = descriptor_text(str(path), ["double"])
    path2 = tmp_path / "second.ini"
    path2.write_text(second, encoding="utf-8")
    model = load_model(path2)
    assert model.transforms[-1] == "double"
    assert model.grid.slot_count == 8


def test_apply_transform_op_vocabulary():
    model = zoo_model("constant_plus")
    assert apply_transform_op(model, "double").flip_mask is not None
    assert apply_transform_op(model, "lambda-sign seed=4").lambda_sign is not None
    assert apply_transform_op(model, "sign values=+-+- station=s1").sign_station is Station.S1
    targeted = apply_transform_op(model, "target alpha=0.5 station=s1 seed=2")
    assert targeted.sign is not None
    with pytest.raises(DescriptorError):
        apply_transform_op(model, "frobnicate hard=yes")
    with pytest.raises(DescriptorError):
        apply_transform_op(model, "rademacher")


def test_make_model_accepts_zoo_name_path_and_rejects_unknown(tmp_path):
    assert make_model("hp_time_correlated").name == "hp_time_correlated"
    path = tmp_path / "m.ini"
    path.write_text("[model]\nzoo = constant_plus\n", encoding="utf-8")
    assert make_model(str(path)).name == "constant_plus"
    with pytest.raises(UnknownZooEntryError, match="missing_thing"):
        make_model("missing_thing")


def test_load_schedule(tmp_path):
    path = tmp_path / "sched.ini"
    path.write_text(
        "[schedule]\ntrials = 50\npolicy = fixed\na = 0.0\nb = 0.785398\n"
        "seed_source = 5\nseed_s1 = 11\n",
        encoding="utf-8",
    )
    schedule = load_schedule(path)
    assert schedule.trials == 50
    assert schedule.policy == "fixed"
    assert schedule.pairs == ((0.0, 0.785398),)
    assert schedule.seed_source == 5
    assert schedule.seed_s1 == 11
    assert schedule.seed_s2 is None


def test_load_schedule_pairs_list(tmp_path):
    path = tmp_path / "sched.ini"
    path.write_text(
        "[schedule]\ntrials = 10\npolicy = cycle\npairs = 0:0, 0:0.785398163397448\n",
        encoding="utf-8",
    )
    schedule = load_schedule(path)
    assert len(schedule.pairs) == 2
