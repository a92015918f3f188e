"""File formats and experiment configuration.

OST1 tensor container (little-endian throughout):

    bytes 0-3   magic "OST1"
    bytes 4-5   version, u16 (currently 1)
    bytes 6-7   ndim, u16
    then        ndim dimension sizes, u64 each
    then        row-major float64 payload, 8 * prod(dims) bytes

Writes go through a temp file plus rename so readers never observe a partial
file.  CSV output is RFC-4180 style (CRLF rows, '.' decimal separator) with
floats printed at 17 significant digits so round-tripping is lossless and
byte-identical across runs.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile

import numpy as np

from . import state as st
from .engine import GateSchedule, StreamSpec, Variant, VariantConfig
from .errors import ConfigError, FormatError

__all__ = [
    "read_ost1",
    "write_ost1",
    "fmt_float",
    "write_text_atomic",
    "ExperimentConfig",
    "parse_config",
    "load_config",
]

_MAGIC = b"OST1"
_VERSION = 1


def write_ost1(path, array) -> None:
    """Write an array as an OST1 file (atomically)."""
    arr = np.ascontiguousarray(np.asarray(array, dtype=float))
    if arr.ndim < 1:
        arr = arr.reshape(1)
    header = _MAGIC + struct.pack("<HH", _VERSION, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    _write_bytes_atomic(path, header + arr.astype("<f8").tobytes(order="C"))


def read_ost1(path) -> np.ndarray:
    """Read an OST1 file; raises FormatError on any structural mismatch."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 8 or data[:4] != _MAGIC:
        raise FormatError(f"{path}: bad magic, not an OST1 tensor")
    version, ndim = struct.unpack("<HH", data[4:8])
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported OST1 version {version}")
    need = 8 + 8 * ndim
    if len(data) < need:
        raise FormatError(f"{path}: truncated OST1 header")
    dims = struct.unpack(f"<{ndim}Q", data[8:need])
    count = int(np.prod(dims)) if ndim else 0
    payload = data[need:]
    if len(payload) != 8 * count:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, dims {dims} require {8 * count}"
        )
    arr = np.frombuffer(payload, dtype="<f8").astype(float).reshape(dims)
    return arr


def _write_bytes_atomic(path, blob: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-ost1-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text_atomic(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-txt-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt_float(x) -> str:
    """Fixed 17-significant-digit float formatting used in all CSV output."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return "%.17g" % x


# --------------------------------------------------------------------------
# Experiment configuration (strict JSON)
# --------------------------------------------------------------------------

_TOP_KEYS = {"seed", "stream", "variant", "ns", "gamma", "init",
             "diagnostics_cadence", "output_dir"}
_STREAM_KEYS = {"c_v", "c_k", "length", "key_mode", "probe_count", "gates"}
_GATE_KEYS = {"kind", "alpha", "beta", "alpha_range", "beta_range", "seed"}
_NS_KEYS = {"preset", "a", "b", "c", "iterations", "epsilon"}


class ExperimentConfig:
    """Validated experiment description ready to hand to the engine."""

    def __init__(self, spec: StreamSpec, variant: VariantConfig, cadence, init, output_dir):
        self.spec = spec
        self.variant = variant
        self.cadence = cadence
        self.init = init
        self.output_dir = output_dir


def _reject_unknown(section: dict, allowed: set, where: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key '{key}' in {where}")


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing key '{key}' in {where}")
    return section[key]


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a config mapping; unknown keys anywhere are rejected by name."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "config root")

    seed = _require(doc, "seed", "config root")
    if not isinstance(seed, int):
        raise ConfigError("key 'seed' must be an integer")

    stream = _require(doc, "stream", "config root")
    if not isinstance(stream, dict):
        raise ConfigError("key 'stream' must be an object")
    _reject_unknown(stream, _STREAM_KEYS, "stream")
    gates_doc = _require(stream, "gates", "stream")
    if not isinstance(gates_doc, dict):
        raise ConfigError("key 'gates' must be an object")
    _reject_unknown(gates_doc, _GATE_KEYS, "stream.gates")
    kind = _require(gates_doc, "kind", "stream.gates")
    try:
        if kind == "constant":
            gates = GateSchedule.constant(
                _require(gates_doc, "alpha", "stream.gates"),
                _require(gates_doc, "beta", "stream.gates"),
            )
        elif kind == "random":
            gates = GateSchedule.random(
                _require(gates_doc, "alpha_range", "stream.gates"),
                _require(gates_doc, "beta_range", "stream.gates"),
                seed=gates_doc.get("seed"),
            )
        else:
            raise ConfigError(f"unknown gate kind '{kind}'")
        spec = StreamSpec(
            c_v=_require(stream, "c_v", "stream"),
            c_k=_require(stream, "c_k", "stream"),
            length=_require(stream, "length", "stream"),
            gates=gates,
            key_mode=stream.get("key_mode", "random-unit"),
            probe_count=stream.get("probe_count", 0),
            seed=seed,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid stream section: {exc}")

    variant_name = _require(doc, "variant", "config root")
    try:
        variant = Variant(variant_name)
    except ValueError:
        raise ConfigError(
            f"unknown variant '{variant_name}'; expected one of {[v.value for v in Variant]}"
        )

    ns_doc = doc.get("ns", {})
    if not isinstance(ns_doc, dict):
        raise ConfigError("key 'ns' must be an object")
    _reject_unknown(ns_doc, _NS_KEYS, "ns")
    try:
        if any(k in ns_doc for k in ("a", "b", "c")):
            ns = st.NsConfig(
                a=_require(ns_doc, "a", "ns"),
                b=_require(ns_doc, "b", "ns"),
                c=_require(ns_doc, "c", "ns"),
                iterations=ns_doc.get("iterations", 5),
                epsilon=ns_doc.get("epsilon", 1e-8),
            )
        else:
            ns = st.ns_config(
                preset=ns_doc.get("preset", "strict"),
                iterations=ns_doc.get("iterations", 5),
                epsilon=ns_doc.get("epsilon", 1e-8),
            )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid ns section: {exc}")

    gamma = doc.get("gamma", 2.0)
    try:
        vcfg = VariantConfig(variant=variant, ns=ns, gamma=gamma)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid variant/gamma: {exc}")

    # default cadence: every step for short runs, every 10th beyond T=2000
    # (the per-step SVD oracle dominates runtime on long trajectories)
    cadence = doc.get("diagnostics_cadence", "every" if spec.length <= 2000 else 10)
    if cadence not in ("every", "none"):
        if not isinstance(cadence, int) or cadence < 1:
            raise ConfigError(
                "key 'diagnostics_cadence' must be 'every', 'none', or a positive integer"
            )

    init = doc.get("init", "zero")
    if init not in ("zero", "random-orthogonal"):
        raise ConfigError("key 'init' must be 'zero' or 'random-orthogonal'")

    output_dir = _require(doc, "output_dir", "config root")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("key 'output_dir' must be a non-empty string")

    return ExperimentConfig(spec=spec, variant=vcfg, cadence=cadence, init=init,
                            output_dir=output_dir)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}")
    return parse_config(doc)
