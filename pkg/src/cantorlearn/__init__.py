"""cantorlearn: an exact-arithmetic laboratory for learning computable
probability measures on Cantor space from random binary streams."""

__version__ = "0.1.0"
