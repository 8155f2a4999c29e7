"""Content-collaborative size and fit prediction.

A two-pathway network over customer and article features with entity
embeddings, trained by maximizing the categorical likelihood of observed
fit outcomes, plus MLP, Naive Bayes and population-marginal comparators and
a metrics harness.
"""

__version__ = "0.1.0"
