"""Gender prediction for English-Hindi code-mixed tweets."""

__version__ = "0.1.0"
