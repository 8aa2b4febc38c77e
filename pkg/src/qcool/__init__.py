"""Damped harmonic-oscillator model of laser cooling.

Submodules: ``oscillator`` (1D basis), ``states`` (3D modes and
superpositions), ``expectation`` (velocity moments), ``thermal``
(Boltzmann weights and series), ``coolsolve`` (cooling temperature),
``gridlab`` (grid time integration), ``cli``.
"""
from qcool.kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
