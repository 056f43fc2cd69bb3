"""Weakly supervised lexical normalization with a rule attention teacher."""
__version__ = "0.1.0"
