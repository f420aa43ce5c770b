"""Numerical laboratory for p-homogeneous gradient reaction-diffusion systems.

Modules:
    nonlinearity  homogeneous gradient fields F = grad G and identity checks
    dynamics      method-of-lines heat-flow solver and blow-up rate fits
    selfsimilar   self-similar variables and the Gaussian-weighted energy
    zeronumber    sign-change counts and invariant cones
    stationary    shooting for radial / half-line stationary profiles
    machinery     point/time selection, bootstrap schedules, coverings
    harness       simulation campaigns and universal-bound envelopes
    cli           the ``liouville-lab`` command
"""

__version__ = "0.1.0"
