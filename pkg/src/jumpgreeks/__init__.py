"""Monte Carlo Delta for options on pure-jump diffusions.

Weight-based sensitivity estimation with respect to jump amplitudes, jump
times, or both, for assets driven by a compound Poisson process with drift;
includes a generic simple-functional calculus, closed-form weight kernels for
the two benchmark models, payoff localization, a finite-difference baseline,
and a benchmark CLI.
"""

from . import bench_cli, greeks, jump_sde, malliavin_core, noise_model

__version__ = "0.1.0"

__all__ = ["noise_model", "jump_sde", "malliavin_core", "greeks", "bench_cli", "__version__"]
