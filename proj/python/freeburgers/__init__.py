"""Free Burgers flows: Cauchy transforms, series laws, evolution and particle systems."""

from ._core import (
    Error,
    Measure,
    bernoulli,
    dirac,
    evolve,
    initial,
    ks_distance,
    marcenko_pastur,
    push_forward_square,
    run_cli,
    semicircle,
    series_cumulants,
    simulate,
    solve,
    symmetrize,
)

__all__ = [
    "Error",
    "Measure",
    "bernoulli",
    "dirac",
    "evolve",
    "initial",
    "ks_distance",
    "marcenko_pastur",
    "push_forward_square",
    "run_cli",
    "semicircle",
    "series_cumulants",
    "simulate",
    "solve",
    "symmetrize",
]
