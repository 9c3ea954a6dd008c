"""Numerical testbench comparing standard quantum predictions with a
finite-discretization (invariant set) model on three proposed experiments:
iterated-beamsplitter W states, the two-photon ring-aperture test, and the
gravitational spin-entanglement witness."""

__version__ = "0.1.0"
