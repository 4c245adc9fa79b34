"""Multilingual churn-intent detection toolkit.

Subsystems: word embeddings and their bilingual alignment, social-media
text preparation, a CNN-BiGRU-attention classifier on a minimal autodiff
core, dataset construction and bootstrapping, a cross-validation harness,
and an HTTP annotation service with its feedback store.
"""

__version__ = "0.1.0"

from . import (  # noqa: F401
    align,
    checkpoint,
    datasets,
    embeddings,
    evaluation,
    metrics,
    model,
    nn,
    service,
    textprep,
)
