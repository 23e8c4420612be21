"""Wire messages between edge and cloud, plus u32 length-prefixed stream framing.

DraftBlockMsg (little-endian):   0xD1 | session u32 | offset u64 | count u16 | count x token u16
VerifyResultMsg (little-endian): 0xD2 | session u32 | offset u64 | accepted u16 | correction u16
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO

DRAFT_MAGIC = 0xD1
VERIFY_MAGIC = 0xD2

_DRAFT_HEADER = struct.Struct("<BIQH")
_VERIFY = struct.Struct("<BIQHH")
_FRAME_LEN = struct.Struct(">I")

DRAFT_HEADER_BYTES = _DRAFT_HEADER.size  # 15
TOKEN_BYTES = 2
HEADER_BITS = 8 * DRAFT_HEADER_BYTES
TOKEN_BITS = 8 * TOKEN_BYTES
VERIFY_BYTES = _VERIFY.size  # 17

_U16 = 0xFFFF
_U32 = 0xFFFFFFFF
_U64 = 0xFFFFFFFFFFFFFFFF


class CodecError(ValueError):
    pass


@dataclass(frozen=True)
class DraftBlockMsg:
    session_id: int
    seq_offset: int
    tokens: tuple[int, ...]

    @property
    def count(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class VerifyResultMsg:
    session_id: int
    seq_offset: int
    accepted: int
    correction: int


def draft_block_size(count: int) -> int:
    """Encoded size in bytes of a DraftBlockMsg carrying ``count`` tokens."""
    return DRAFT_HEADER_BYTES + TOKEN_BYTES * count


def _check(value: int, limit: int, name: str) -> None:
    if not 0 <= value <= limit:
        raise CodecError(f"{name}={value} out of range [0, {limit}]")


def encode(msg: DraftBlockMsg | VerifyResultMsg) -> bytes:
    _check(msg.session_id, _U32, "session_id")
    _check(msg.seq_offset, _U64, "seq_offset")
    if isinstance(msg, DraftBlockMsg):
        if not 1 <= msg.count <= _U16:
            raise CodecError(f"draft block count {msg.count} out of range [1, {_U16}]")
        for tok in msg.tokens:
            _check(tok, _U16, "token")
        header = _DRAFT_HEADER.pack(DRAFT_MAGIC, msg.session_id, msg.seq_offset, msg.count)
        return header + struct.pack(f"<{msg.count}H", *msg.tokens)
    if isinstance(msg, VerifyResultMsg):
        _check(msg.accepted, _U16, "accepted")
        _check(msg.correction, _U16, "correction")
        return _VERIFY.pack(VERIFY_MAGIC, msg.session_id, msg.seq_offset, msg.accepted, msg.correction)
    raise TypeError(f"cannot encode {type(msg).__name__}")


def decode(buf: bytes) -> DraftBlockMsg | VerifyResultMsg:
    if not buf:
        raise CodecError("empty buffer")
    magic = buf[0]
    if magic == DRAFT_MAGIC:
        if len(buf) < DRAFT_HEADER_BYTES:
            raise CodecError("truncated draft block header")
        _, sid, offset, count = _DRAFT_HEADER.unpack_from(buf)
        expected = draft_block_size(count)
        if len(buf) < expected:
            raise CodecError(f"truncated draft block: {len(buf)} < {expected} bytes")
        if len(buf) > expected:
            raise CodecError(f"{len(buf) - expected} trailing bytes after draft block")
        if count == 0:
            raise CodecError("draft block with zero tokens")
        tokens = struct.unpack_from(f"<{count}H", buf, DRAFT_HEADER_BYTES)
        return DraftBlockMsg(sid, offset, tuple(tokens))
    if magic == VERIFY_MAGIC:
        if len(buf) < VERIFY_BYTES:
            raise CodecError("truncated verify result")
        if len(buf) > VERIFY_BYTES:
            raise CodecError(f"{len(buf) - VERIFY_BYTES} trailing bytes after verify result")
        _, sid, offset, accepted, correction = _VERIFY.unpack(buf)
        return VerifyResultMsg(sid, offset, accepted, correction)
    raise CodecError(f"bad magic byte 0x{magic:02X}")


def frame(payload: bytes) -> bytes:
    if len(payload) > _U32:
        raise CodecError("frame too large")
    return _FRAME_LEN.pack(len(payload)) + payload


def write_frame(stream: BinaryIO, payload: bytes) -> None:
    stream.write(frame(payload))


def read_frame(stream: BinaryIO) -> bytes | None:
    """Read one frame; ``None`` on clean EOF, CodecError on a partial frame."""
    head = stream.read(_FRAME_LEN.size)
    if not head:
        return None
    if len(head) < _FRAME_LEN.size:
        raise CodecError("truncated frame length")
    (n,) = _FRAME_LEN.unpack(head)
    body = stream.read(n)
    if len(body) < n:
        raise CodecError(f"truncated frame body: {len(body)} < {n}")
    return body


class FrameDecoder:
    """Incremental deframer for a byte stream that arrives in arbitrary chunks."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[bytes]:
        self._buf.extend(data)
        frames = []
        while len(self._buf) >= _FRAME_LEN.size:
            (n,) = _FRAME_LEN.unpack_from(self._buf)
            if len(self._buf) < _FRAME_LEN.size + n:
                break
            frames.append(bytes(self._buf[_FRAME_LEN.size:_FRAME_LEN.size + n]))
            del self._buf[:_FRAME_LEN.size + n]
        return frames

    @property
    def pending(self) -> int:
        return len(self._buf)
