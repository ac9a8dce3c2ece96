"""Pulsating bistable fronts in slowly oscillating periodic media.

Submodules: ``medium`` (coefficients and margins), ``homowave`` (frozen
traveling waves and the harmonic-mean speed), ``pdesolver`` (monotone
finite-difference evolution), ``fronts`` (speeds, profiles, widths),
``envelopes`` (explicit sub/super-solution audits), ``zeros`` (sign-change
counting and stationary comparators) and ``cli``.
"""

__version__ = "0.1.0"
