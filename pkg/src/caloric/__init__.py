"""Rational heat-equation approximants, Cole-Hopf transport to Burgers-type equations,
Runge-pair geometry checks and desk-scale universal solutions."""

__version__ = "0.1.0"
