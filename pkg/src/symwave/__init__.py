"""Symmetric multiresolution wavelets from affiliated dilation/symmetry pairs.

Modules: lattice (integer matrices, cosets, characters), symmetry
(affiliated groups and the n = 2 census), torusfn (Laurent polynomials,
grid fields, bracket sums), transfer (transfer operator and normalization),
cascade (scaling functions), waveletgen (wavelet families) and cli.
"""

__version__ = "0.1.0"
