"""Computational toolkit for fractional currents: dyadic chains, flat norms,
fractional Sobolev seminorms, Whitney decompositions of fractal domains,
Hölder pushforwards, and Young-type integrals."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import ConfigError, FraccurError, NumericalError, PreconditionError  # noqa: F401
