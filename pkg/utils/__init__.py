"""Density-theorem toolkit: frames, Gabor systems, Bergman kernels and the vol * d_pi trichotomy."""

__version__ = "0.1.0"
