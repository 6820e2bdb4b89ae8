"""maxlin - anchored max-linear regression and phase-transition experiments."""

__version__ = "0.1.0"
