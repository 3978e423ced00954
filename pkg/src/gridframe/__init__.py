"""Clarke, Park and symmetrical transforms with adaptive self-balancing variants."""

__version__ = "0.1.0"
