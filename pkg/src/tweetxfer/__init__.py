"""Desk-scale transfer learning for German tweet classification.

The pieces: tweet text preparation (textprep), dataset handling
(corpus), subword embeddings (embed), Gibbs-sampled topics and user
clusters (lda), the BiLSTM-CNN classifier with manual gradients (net),
pre-training and unfreezing strategies (transfer), metrics (evalkit), a
linear reference model (baseline), synthetic corpora (fixtures), and
the command line (cli).
"""

from .errors import DataError

__all__ = ["DataError"]
__version__ = "0.1.0"
