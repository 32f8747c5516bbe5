"""Low-degree polynomial estimation bounds for planted submatrix, dense
subgraph and planted clique models."""

__version__ = "0.1.0"
