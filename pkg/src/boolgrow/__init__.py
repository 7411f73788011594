"""Growth processes on random Boolean formulas and their Fourier spectra."""

__version__ = "0.1.0"
