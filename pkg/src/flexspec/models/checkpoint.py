"""Binary checkpoint container for named float64 tensors.

Layout (little-endian): magic ``b"FXSP"``, format version u16, then per
tensor: name length u16, UTF-8 name, ndim u8, ndim x u32 dims, f64 payload.
"""
from __future__ import annotations

import struct

import numpy as np

from .anchored import AnchorBlock, DraftModel, HeadParams, NGramFeatures

MAGIC = b"FXSP"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def pack_tensors(tensors: dict[str, np.ndarray]) -> bytes:
    out = [MAGIC, struct.pack("<H", FORMAT_VERSION)]
    for name, arr in tensors.items():
        raw = name.encode("utf-8")
        arr = np.asarray(arr, dtype="<f8")
        if len(raw) > 0xFFFF or arr.ndim > 0xFF:
            raise CheckpointError(f"tensor {name!r} cannot be encoded")
        out.append(struct.pack("<H", len(raw)))
        out.append(raw)
        out.append(struct.pack("<B", arr.ndim))
        out.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        out.append(np.ascontiguousarray(arr).tobytes())
    return b"".join(out)


def unpack_tensors(buf: bytes) -> dict[str, np.ndarray]:
    if buf[:4] != MAGIC:
        raise CheckpointError("bad checkpoint magic")
    if len(buf) < 6:
        raise CheckpointError("truncated checkpoint header")
    (version,) = struct.unpack_from("<H", buf, 4)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    pos = 6
    tensors: dict[str, np.ndarray] = {}
    try:
        while pos < len(buf):
            (n,) = struct.unpack_from("<H", buf, pos)
            pos += 2
            name = buf[pos:pos + n].decode("utf-8")
            if len(name.encode("utf-8")) != n:
                raise CheckpointError("truncated tensor name")
            pos += n
            (ndim,) = struct.unpack_from("<B", buf, pos)
            pos += 1
            shape = struct.unpack_from(f"<{ndim}I", buf, pos)
            pos += 4 * ndim
            count = int(np.prod(shape, dtype=np.int64))
            end = pos + 8 * count
            if end > len(buf):
                raise CheckpointError(f"truncated payload for {name!r}")
            tensors[name] = np.frombuffer(buf, dtype="<f8", count=count, offset=pos).reshape(shape).astype(np.float64)
            pos = end
    except struct.error as exc:
        raise CheckpointError(f"truncated checkpoint: {exc}") from None
    return tensors


def draft_to_tensors(draft: DraftModel) -> dict[str, np.ndarray]:
    return {
        "meta": np.array([float(draft.proxy.seed), float(draft.anchored)]),
        "anchor.weight": draft.anchor.weight,
        "anchor.bias": draft.anchor.bias,
        "lm_head": draft.lm_head,
        "proxy.tables": draft.proxy.tables,
        "proxy.weights": draft.proxy.weights,
        **{f"head.{k}": v for k, v in draft.head.as_dict().items()},
        "w_p": draft.w_p,
    }


def draft_from_tensors(t: dict[str, np.ndarray]) -> DraftModel:
    try:
        seed, anchored = t["meta"]
        return DraftModel(
            anchor=AnchorBlock(t["anchor.weight"], t["anchor.bias"]),
            lm_head=t["lm_head"],
            proxy=NGramFeatures(t["proxy.tables"], t["proxy.weights"], int(seed)),
            head=HeadParams(t["head.W1"], t["head.b1"], t["head.W2"], t["head.b2"]),
            w_p=t["w_p"],
            anchored=bool(anchored),
        )
    except KeyError as exc:
        raise CheckpointError(f"missing tensor {exc}") from None


def save_draft(draft: DraftModel) -> bytes:
    return pack_tensors(draft_to_tensors(draft))


def load_draft(buf: bytes) -> DraftModel:
    return draft_from_tensors(unpack_tensors(buf))
