from .bac import BitstreamError, ContextSet, RangeDecoder, RangeEncoder
from .bitstream import MAGIC, VARIANTS, StreamHeader, pack_header, parse_header
from .codec import (DecodedFrame, EncodedFrame, EncoderConfig, decode_frame,
                    decode_stream, encode_frame, encode_stream)
from .syntax import interp_context_index
from .transform import dequant_inverse, reconstruct_block, transform_quant

__all__ = [
    "BitstreamError", "ContextSet", "RangeDecoder", "RangeEncoder",
    "MAGIC", "VARIANTS", "StreamHeader", "pack_header", "parse_header",
    "DecodedFrame", "EncodedFrame", "EncoderConfig",
    "decode_frame", "decode_stream", "encode_frame", "encode_stream",
    "interp_context_index", "dequant_inverse", "reconstruct_block",
    "transform_quant",
]
