"""Bit-exact run checkpoints.

Versioned binary format, explicitly little-endian, with a magic header
and length-prefixed blocks, so resumed chains reproduce uninterrupted
ones bit for bit (full PCG64 state capture needs a binary format):

    magic   8 bytes  b"OYMCKPT\\x01"
    blocks  tag (4 ascii bytes) + u64 payload length + payload

Blocks, in order: CFGH (config sha256 hex), TRAJ (u64 completed
trajectory counter), RNGS (PCG64 state: u8 has_uint32, u32 uinteger,
u128 state, u128 inc), then one ARRY block per field array (u16 name
length + name, u32 ndim, u32 dims..., raw '<c16' data).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"OYMCKPT\x01"


class CheckpointError(RuntimeError):
    pass


class CheckpointMismatchError(CheckpointError):
    """Checkpoint belongs to a different configuration."""


@dataclass
class Checkpoint:
    config_hash: str
    trajectory: int
    rng_state: dict
    arrays: dict[str, np.ndarray]


def _block(tag: bytes, payload: bytes) -> bytes:
    assert len(tag) == 4
    return tag + struct.pack("<Q", len(payload)) + payload


def _pack_rng(state: dict) -> bytes:
    if state["bit_generator"] != "PCG64":
        raise CheckpointError(f"unsupported generator {state['bit_generator']!r}")
    inner = state["state"]
    return (
        struct.pack("<BI", int(state["has_uint32"]), int(state["uinteger"]))
        + int(inner["state"]).to_bytes(16, "little")
        + int(inner["inc"]).to_bytes(16, "little")
    )


def _unpack_rng(payload: bytes) -> dict:
    has_uint32, uinteger = struct.unpack("<BI", payload[:5])
    state = int.from_bytes(payload[5:21], "little")
    inc = int.from_bytes(payload[21:37], "little")
    return {
        "bit_generator": "PCG64",
        "state": {"state": state, "inc": inc},
        "has_uint32": has_uint32,
        "uinteger": uinteger,
    }


def _pack_array(name: str, arr: np.ndarray) -> bytes:
    data = np.ascontiguousarray(arr, dtype="<c16")
    head = struct.pack("<H", len(name)) + name.encode("ascii")
    head += struct.pack("<I", data.ndim)
    head += struct.pack(f"<{data.ndim}I", *data.shape)
    return head + data.tobytes()


def _unpack_array(payload: bytes):
    (name_len,) = struct.unpack_from("<H", payload, 0)
    offset = 2
    name = payload[offset : offset + name_len].decode("ascii")
    offset += name_len
    (ndim,) = struct.unpack_from("<I", payload, offset)
    offset += 4
    dims = struct.unpack_from(f"<{ndim}I", payload, offset)
    offset += 4 * ndim
    arr = np.frombuffer(payload[offset:], dtype="<c16").reshape(dims).copy()
    return name, arr


def write_checkpoint(path, config_hash: str, trajectory: int,
                     rng: np.random.Generator, arrays: dict[str, np.ndarray]):
    blob = MAGIC
    blob += _block(b"CFGH", config_hash.encode("ascii"))
    blob += _block(b"TRAJ", struct.pack("<Q", trajectory))
    blob += _block(b"RNGS", _pack_rng(rng.bit_generator.state))
    for name, arr in arrays.items():
        blob += _block(b"ARRY", _pack_array(name, arr))
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    import os

    os.replace(tmp, path)  # atomic on POSIX; never leaves a torn checkpoint


def read_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: bad magic or unsupported version")
    offset = len(MAGIC)
    config_hash = ""
    trajectory = -1
    rng_state = None
    arrays: dict[str, np.ndarray] = {}
    while offset < len(blob):
        tag = blob[offset : offset + 4]
        (length,) = struct.unpack_from("<Q", blob, offset + 4)
        payload = blob[offset + 12 : offset + 12 + length]
        if len(payload) != length:
            raise CheckpointError(f"{path}: truncated block {tag!r}")
        offset += 12 + length
        if tag == b"CFGH":
            config_hash = payload.decode("ascii")
        elif tag == b"TRAJ":
            (trajectory,) = struct.unpack("<Q", payload)
        elif tag == b"RNGS":
            rng_state = _unpack_rng(payload)
        elif tag == b"ARRY":
            name, arr = _unpack_array(payload)
            arrays[name] = arr
        else:
            raise CheckpointError(f"{path}: unknown block {tag!r}")
    if not config_hash or trajectory < 0 or rng_state is None:
        raise CheckpointError(f"{path}: incomplete checkpoint")
    return Checkpoint(config_hash, trajectory, rng_state, arrays)
