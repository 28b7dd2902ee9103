"""orbitindex: stability indices of periodic orbits from trivialized data.

Pipeline: ingest trivialized second-variation coefficients (P, Q, R, A),
integrate the linear Hamiltonian flow, compute the geometrical (Maslov)
index, the spectral index (spectral flow of the twisted Sturm-Liouville
family), verify the index identity, and apply the parity-based linear
instability criterion with direct Floquet cross-checks.
"""

__version__ = "0.1.0"
