"""Explainable predictive analytics over case-centric event logs.

Train a random forest or a recurrent network on per-case activity sequences,
then interrogate the trained model: gini importances, PDP/ICE/ALE curves,
global surrogates, local kernel-weighted linear explanations with a greedy
global summary, and 2-D autoencoder projections of intercepted hidden layers.
"""

__version__ = "0.1.0"

from . import container, encode, eventlog, explain, forest, latent, seqnet, svgplot, synth  # noqa: F401
