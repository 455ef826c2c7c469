"""Defining a new problem and running it through the command line.

Save a factory ``make(alpha) -> ProblemSpec`` in an importable module and pass
``--problem module:make``.  Here the module is this file.

    PYTHONPATH=demos fracvolve --problem custom_problem:make --alpha 0.5 \
        --cells 8,16,32 --tau 1/100 --out /tmp/custom
"""
import math

import numpy as np

from fracvolve import ProblemSpec


def make(alpha):
    # u = t sin(pi x) on (0, 1) with a = 1 and q = 0
    def source(x, t):
        s = np.sin(math.pi * x[:, 0])
        return (t ** (1 - alpha) / math.gamma(2 - alpha) + math.pi ** 2 * t) * s

    return ProblemSpec(
        dim=1, alpha=alpha,
        diffusion=lambda x: np.ones(len(x)),
        reaction=lambda x: np.zeros(len(x)),
        source=source,
        initial=lambda x: np.zeros(len(x)),
        domain=((0.0,), (1.0,)),
        exact=lambda x, t: t * np.sin(math.pi * x[:, 0]),
        exact_grad=lambda x, t: (math.pi * t * np.cos(math.pi * x[:, 0]))[:, None],
        name="sine",
    )


if __name__ == "__main__":
    from fracvolve import run_convergence_study, spatial_sweep
    table = run_convergence_study(make, spatial_sweep([8, 16, 32], 1e-2), [0.5], name="sine")
    print(table.to_csv("l2"))
