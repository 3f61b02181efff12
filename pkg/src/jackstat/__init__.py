"""jackstat: jackknife-extension estimators, U-statistics, and efficiency
diagnostics.

The package is organized by layer:

* kernels        - symmetric fixed-arity kernels and their registry
* ustat_engine   - exact / incremental / subsampled U-statistics and
                   jackknife extension chains
* hoeffding      - projection variances, variance identities, CLT diagnostic
* families       - one-parameter distributions, Fisher information, bounds,
                   exponential-family construction, MLE
* lstat_median   - exact rational calculus of order-statistic weights
* exact_oracle   - brute-force exact moments over finite-support laws
* expcli         - config-driven experiments and the command-line interface
"""

from . import (  # noqa: F401
    exact_oracle,
    expcli,
    families,
    hoeffding,
    kernels,
    lstat_median,
    numeric,
    ustat_engine,
)

__version__ = "0.1.0"
