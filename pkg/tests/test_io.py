"""Tests for the OST1 container and strict config parsing."""

import struct

import numpy as np
import pytest

from orthomem.engine import Variant
from orthomem.errors import ConfigError, FormatError
from orthomem.io import fmt_float, parse_config, read_ost1, write_ost1


def base_config(**overrides):
    doc = {
        "seed": 42,
        "stream": {
            "c_v": 8,
            "c_k": 8,
            "length": 50,
            "key_mode": "random-unit",
            "probe_count": 4,
            "gates": {"kind": "constant", "alpha": 0.95, "beta": 0.9},
        },
        "variant": "full",
        "ns": {"preset": "strict", "iterations": 15},
        "gamma": 2.0,
        "diagnostics_cadence": "every",
        "output_dir": "out",
    }
    doc.update(overrides)
    return doc


class TestOst1:
    @pytest.mark.parametrize("shape", [(1,), (7,), (3, 2), (2, 3, 4), (2, 2, 3, 3)])
    def test_round_trip(self, tmp_path, shape):
        rng = np.random.default_rng(0)
        arr = rng.standard_normal(shape)
        p = tmp_path / "t.ost1"
        write_ost1(p, arr)
        back = read_ost1(p)
        assert back.shape == arr.shape
        assert np.array_equal(back, arr)

    def test_round_trip_byte_identical(self, tmp_path):
        arr = np.random.default_rng(1).standard_normal((4, 5))
        a = tmp_path / "a.ost1"
        b = tmp_path / "b.ost1"
        write_ost1(a, arr)
        write_ost1(b, read_ost1(a))
        assert a.read_bytes() == b.read_bytes()

    def test_header_layout(self, tmp_path):
        p = tmp_path / "h.ost1"
        write_ost1(p, np.zeros((2, 3)))
        blob = p.read_bytes()
        assert blob[:4] == b"OST1"
        version, ndim = struct.unpack("<HH", blob[4:8])
        assert (version, ndim) == (1, 2)
        assert struct.unpack("<2Q", blob[8:24]) == (2, 3)
        assert len(blob) == 24 + 6 * 8

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "x.ost1"
        p.write_bytes(b"NOPE" + b"\x00" * 20)
        with pytest.raises(FormatError, match="magic"):
            read_ost1(p)

    def test_bad_version(self, tmp_path):
        p = tmp_path / "x.ost1"
        p.write_bytes(b"OST1" + struct.pack("<HH", 9, 1) + struct.pack("<Q", 0))
        with pytest.raises(FormatError, match="version"):
            read_ost1(p)

    def test_truncated_payload(self, tmp_path):
        p = tmp_path / "x.ost1"
        p.write_bytes(b"OST1" + struct.pack("<HH", 1, 1) + struct.pack("<Q", 4) + b"\x00" * 8)
        with pytest.raises(FormatError, match="payload"):
            read_ost1(p)


class TestFmtFloat:
    def test_round_trips_doubles(self):
        rng = np.random.default_rng(2)
        for x in rng.standard_normal(200) * 10.0 ** rng.integers(-300, 300, 200):
            assert float(fmt_float(x)) == x

    def test_special_values(self):
        assert fmt_float(float("inf")) == "inf"
        assert fmt_float(0.0) == "0"


class TestParseConfig:
    def test_valid(self):
        cfg = parse_config(base_config())
        assert cfg.spec.seed == 42
        assert cfg.variant.variant is Variant.FULL
        assert cfg.variant.ns.iterations == 15
        assert cfg.cadence == "every"

    def test_unknown_root_key(self):
        with pytest.raises(ConfigError, match="foo"):
            parse_config(base_config(foo=1))

    def test_unknown_stream_key(self):
        doc = base_config()
        doc["stream"]["bar"] = 1
        with pytest.raises(ConfigError, match="bar"):
            parse_config(doc)

    def test_unknown_gate_key(self):
        doc = base_config()
        doc["stream"]["gates"]["baz"] = 1
        with pytest.raises(ConfigError, match="baz"):
            parse_config(doc)

    def test_unknown_ns_key(self):
        doc = base_config()
        doc["ns"]["qux"] = 1
        with pytest.raises(ConfigError, match="qux"):
            parse_config(doc)

    def test_missing_required(self):
        doc = base_config()
        del doc["output_dir"]
        with pytest.raises(ConfigError, match="output_dir"):
            parse_config(doc)

    def test_unknown_variant(self):
        with pytest.raises(ConfigError, match="variant"):
            parse_config(base_config(variant="hybrid"))

    def test_bad_cadence(self):
        with pytest.raises(ConfigError, match="diagnostics_cadence"):
            parse_config(base_config(diagnostics_cadence="sometimes"))
        cfg = parse_config(base_config(diagnostics_cadence=10))
        assert cfg.cadence == 10

    def test_default_cadence_depends_on_length(self):
        doc = base_config()
        del doc["diagnostics_cadence"]
        assert parse_config(doc).cadence == "every"
        doc["stream"]["length"] = 5000
        assert parse_config(doc).cadence == 10  # oracle cost grows with T

    def test_random_gates(self):
        doc = base_config()
        doc["stream"]["gates"] = {"kind": "random", "alpha_range": [0.8, 1.0],
                                  "beta_range": [0.2, 0.4]}
        cfg = parse_config(doc)
        assert cfg.spec.gates.kind == "random"

    def test_explicit_coefficients(self):
        doc = base_config()
        doc["ns"] = {"a": 1.5, "b": -0.5, "c": 0.0, "iterations": 8}
        cfg = parse_config(doc)
        assert cfg.variant.ns.a == 1.5

    def test_gate_range_out_of_bounds(self):
        doc = base_config()
        doc["stream"]["gates"] = {"kind": "random", "alpha_range": [0.8, 1.2],
                                  "beta_range": [0.2, 0.4]}
        with pytest.raises(ConfigError):
            parse_config(doc)
