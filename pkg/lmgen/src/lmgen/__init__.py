"""Generation service speaking the candidate-event wire protocol.

Stub mode is deterministic and needs no model weights; seq2seq mode wraps
an optional encoder-decoder checkpoint behind the same endpoints.
"""

from lmgen.stub import StubModel
from lmgen.service import make_server

__all__ = ["StubModel", "make_server"]
__version__ = "0.1.0"
