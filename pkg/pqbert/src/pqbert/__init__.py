"""Masked-prediction Transformer over compositional code sequences.

Consumes the representation pipeline's codes.jsonl / labels.jsonl
files, pretrains a multi-head masked-prediction encoder, exports
program embeddings in the shared binary format, and trains downstream
classification and regression heads.
"""

__version__ = "0.1.0"
