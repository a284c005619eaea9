"""Near-duplicate image detection benchmark: descriptors, exact search, hard-negative ROC, range-query simulation."""

__version__ = "0.1.0"
