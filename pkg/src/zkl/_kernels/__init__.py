"""Kernel backend selection.

The compiled extension (`_fast`) is preferred; the pure-Python mirror is used
when the extension is missing or when ZKL_PURE_PYTHON is set to a non-empty
value.  Both expose the same functions with identical semantics.
"""

import os

from . import pure

if os.environ.get("ZKL_PURE_PYTHON"):
    active = pure
else:
    try:
        from . import _fast as active  # type: ignore[attr-defined]
    except ImportError:
        active = pure

IMPL = active.IMPL

hybrid_encode_array = active.hybrid_encode_array
hybrid_decode_array = active.hybrid_decode_array
hybrid_nbits_lut = pure.hybrid_nbits_lut
ans_encode = active.ans_encode
ans_decode = active.ans_decode
huff_encode = active.huff_encode
huff_decode = active.huff_decode
tokenize = active.tokenize
decode_graph_ans = active.decode_graph_ans
decode_graph_huff = active.decode_graph_huff
candidate_gains = active.candidate_gains
compute_blocks = pure.compute_blocks
