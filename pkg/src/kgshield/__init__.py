"""(k,x)-isomorphism anonymization for knowledge graphs."""

__version__ = "0.1.0"
