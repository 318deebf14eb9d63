"""Diffusion sampling lab: DDPM forward/reverse processes, ILVR
reference-guided generation, desk-scale analytic oracles and metrics."""

__version__ = "0.1.0"
