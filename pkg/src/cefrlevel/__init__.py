"""CEFR level prediction from learner essays."""

__version__ = "0.1.0"
