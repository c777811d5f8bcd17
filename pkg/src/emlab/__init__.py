"""Numerical laboratory for a damped isentropic Euler-Maxwell plasma model
with a nonconstant ion background.

Subpackages cover the pipeline end to end: spectral grid utilities,
stationary-state construction by fixed-point iteration, nonlinear
perturbation evolution, energy/dissipation certification, and semi-analytic
decay-rate measurement for the linearized whole-space problem.
"""

__version__ = "0.1.0"
