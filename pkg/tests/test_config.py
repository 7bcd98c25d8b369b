"""Configuration axes, named presets, and (de)serialization."""

import json

import pytest

from aodvsim import kernel
from aodvsim.config import INVALIDATION_MODES, PRESETS, Config, from_preset


def test_default_reading():
    assert Config().key() == (
        "f", kernel.SELF_ALLOW, kernel.KEEP_SQN, False, False)


def test_invalidation_menu():
    assert INVALIDATION_MODES == tuple("abcdef")


@pytest.mark.parametrize("name, expect", [
    ("default", Config()),
    ("rfc-a", Config(invalidation="a")),
    ("rfc-b", Config(invalidation="b")),
    ("rfc-c", Config(invalidation="c")),
    ("rfc-d", Config(invalidation="d")),
    ("rfc-e", Config(invalidation="e")),
    ("rfc-f", Config()),
    ("rfc-g", Config(self_entry=kernel.SELF_DISCARD)),
    ("rfc-h", Config(self_entry=kernel.SELF_FWD_NO_UPDATE)),
    ("ns2", Config(unknown_sqn=kernel.NO_UPDATE)),
    ("uiuc", Config(unknown_sqn=kernel.OVERWRITE_ZERO)),
])
def test_presets_pin_the_documented_readings(name, expect):
    assert from_preset(name) == expect


def test_preset_table_is_complete():
    expected = ["default", "ns2", "uiuc"] + [f"rfc-{x}" for x in "abcdefgh"]
    assert sorted(PRESETS) == sorted(expected)


def test_unknown_preset_names_the_choices():
    with pytest.raises(ValueError, match="unknown preset 'rfc-z'"):
        from_preset("rfc-z")


@pytest.mark.parametrize("bad", [
    {"invalidation": "z"},
    {"self_entry": "never"},
    {"unknown_sqn": "coinflip"},
], ids=["invalidation", "self_entry", "unknown_sqn"])
def test_rejects_values_off_the_menu(bad):
    with pytest.raises(ValueError, match=next(iter(bad))):
        Config(**bad)


def test_mapping_round_trip():
    cfg = Config(invalidation="d", variant_fwd_all_rrep=True)
    assert Config.from_mapping(cfg.to_mapping()) == cfg


def test_from_mapping_rejects_stray_fields():
    with pytest.raises(ValueError, match="unknown config field"):
        Config.from_mapping({"invalidation": "a", "ttl": 3})


def test_json_file_round_trip(tmp_path):
    path = tmp_path / "cfg.json"
    cfg = Config(unknown_sqn=kernel.OVERWRITE_ZERO)
    path.write_text(json.dumps(cfg.to_mapping()))
    assert Config.from_json_file(path) == cfg


def test_key_orders_the_kernel_arguments():
    cfg = Config(invalidation="a", variant_fwd_rreq_at_dest=True)
    assert cfg.key() == ("a", kernel.SELF_ALLOW, kernel.KEEP_SQN, True, False)
