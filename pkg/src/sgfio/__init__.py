"""Numerical toolkit for SG-type Fourier integral operators on uniform grids.

Submodules
----------
grid
    Uniform periodic grids, grid functions, discrete Fourier transform, I/O.
weights
    SG weights, probe sets and moderation probes.
symbols
    Symbol classes, seminorm probes, structure functions, asymptotic sums.
phases
    Phase functions, regularity probes and gradient inversion.
operators
    Pseudodifferential and Fourier integral operators on a grid.
calculus
    Composition expansions, parametrix and leading Egorov symbol.
verify
    Norm estimates, decay fits and remainder probes.
cli
    JSON-configured experiment runner.
"""

__version__ = "0.1.0"

from . import grid, weights, symbols, phases, operators, calculus, verify, presets  # noqa: E402

__all__ = ["grid", "weights", "symbols", "phases", "operators", "calculus", "verify",
           "presets", "__version__"]
