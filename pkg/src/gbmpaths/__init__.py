"""Generalized Brownian motion paths space: sampling, closed forms and analytic Feynman integrals."""
