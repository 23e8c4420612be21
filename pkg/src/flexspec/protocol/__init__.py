from .engine import CloudServer, EdgeState, RoundOutcome, draft_block, run_cloud_only_round, run_round
from .messages import (
    DRAFT_HEADER_BYTES,
    HEADER_BITS,
    TOKEN_BITS,
    CodecError,
    DraftBlockMsg,
    FrameDecoder,
    VerifyResultMsg,
    decode,
    draft_block_size,
    encode,
    frame,
    read_frame,
    write_frame,
)
from .session import KvSession, SessionDesyncError, rollback, verify_block

__all__ = [
    "CloudServer", "EdgeState", "RoundOutcome", "draft_block", "run_cloud_only_round", "run_round",
    "DRAFT_HEADER_BYTES", "HEADER_BITS", "TOKEN_BITS", "CodecError", "DraftBlockMsg", "FrameDecoder",
    "VerifyResultMsg", "decode", "draft_block_size", "encode", "frame", "read_frame", "write_frame",
    "KvSession", "SessionDesyncError", "rollback", "verify_block",
]
