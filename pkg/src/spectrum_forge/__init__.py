"""Behavioral-spectrum program characterization for LLVM IR.

Pipeline: parse IR and extract static features, probe programs with
tuned pass sequences to obtain scale-invariant reaction spectra,
quantize spectra into compositional codes, and evaluate embeddings on
compiler-optimization prediction tasks.
"""

__version__ = "0.1.0"
