"""Thermodynamic-limit observables of the massless XXZ spin-1/2 chain.

Subpackages:
- quadrature: Gauss-Legendre / Nystrom / root finding / Barnes G
- kernels: closed-form kernels and bare phases
- dressed: dressed energy, momentum, phase, charge
- strings: bound-state string classification
- saddles: phase functions u_r and their saddle points
- assembler: asymptotic-expansion term assembly
- contours: contour-deformation and multiple-integral verification
- cli: command-line front end
"""

__version__ = "0.1.0"
