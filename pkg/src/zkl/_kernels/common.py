"""Constants shared by the codec, the entropy coder and both kernel backends.

Context layout (133 contexts total):

  DEGREE[32]        selected by the previous degree-delta symbol (clamped)
  REF[32]           selected by the previous list's reference number (clamped)
  BLOCK_COUNT[1]
  BLOCK_FIRST[1]
  BLOCK_EVEN[1]     stored block lengths at even positions (> 0)
  BLOCK_ODD[1]
  FIRST_RESIDUAL[32] selected by the symbol of the residual count (clamped)
  RESIDUAL[32]      selected by the previous residual-delta symbol (clamped)
  ZERO_RUN[1]
"""

CTX_DEGREE = 0
CTX_REF = 32
CTX_BLOCK_COUNT = 64
CTX_BLOCK_FIRST = 65
CTX_BLOCK_EVEN = 66
CTX_BLOCK_ODD = 67
CTX_FIRST_RESIDUAL = 68
CTX_RESIDUAL = 100
CTX_ZERO_RUN = 132
NUM_CONTEXTS = 133
CTX_BUCKETS = 32

# rANS parameters: state in [ANS_LOW, ANS_LOW << ANS_RENORM_BITS), frequency
# tables quantized to sum ANS_M.
ANS_LOW = 1 << 16
ANS_RENORM_BITS = 16
ANS_PROB_BITS = 12
ANS_M = 1 << ANS_PROB_BITS

HUFFMAN_MAX_LENGTH = 20

# Node ids are capped well below the 62-bit hybrid-coding limit so that no
# token ever needs more raw bits than a single bit-I/O call can carry.
MAX_NODE_BITS = 48
