"""bosonlab: a cross-validated numerical laboratory for lattice boson models.

Engines: exact diagonalization (with number/momentum symmetry resolution),
the space-time/stochastic representation (Feynman-Kac identity, Duhamel
series, worldline sampling), contour geometry, high-temperature polymer and
cluster expansions, and the random-permutation cycle model.  Every engine is
checked against an independent oracle at small sizes.
"""

__version__ = "0.1.0"
