"""Central-difference validation of analytic gradients.

Runs in float64 only; the comparison is meaningless in single precision.
"""
import math

import numpy as np


def gradient_check(loss_fn, grad_fn, params, eps=1e-4):
    """Worst relative error between analytic and numeric gradients.

    loss_fn(params) -> scalar loss; grad_fn(params) -> GradientStore.  Both
    must be deterministic (any sampling fixed beforehand).  Every scalar
    parameter is perturbed by +-eps; the relative error uses an absolute
    floor of 1e-8 in the denominator.

    The central difference carries roundoff of about |loss|*ulp/(2*eps),
    ~2e-11 for typical instances at eps=1e-4, so parameters whose true
    gradient is within an order of magnitude of that floor can report
    relative errors far above the agreement everywhere else.  Larger eps
    inside the allowed range is the robust choice.
    """
    if not (1e-6 <= eps <= 1e-4):
        raise ValueError(f"eps {eps} outside [1e-6, 1e-4]")
    if params.dtype != np.float64:
        raise ValueError("gradient_check requires float64 parameters")
    base = loss_fn(params)
    if not math.isfinite(base):
        raise FloatingPointError(f"loss is not finite: {base}")
    analytic = grad_fn(params)
    worst = 0.0
    for name, arr in params.named_arrays():
        ana = analytic[name]
        flat = arr.ravel()
        ana_flat = ana.ravel()
        for idx in range(flat.size):
            saved = flat[idx]
            flat[idx] = saved + eps
            up = loss_fn(params)
            flat[idx] = saved - eps
            down = loss_fn(params)
            flat[idx] = saved
            if not (math.isfinite(up) and math.isfinite(down)):
                raise FloatingPointError(f"loss not finite while perturbing {name}[{idx}]")
            numeric = (up - down) / (2.0 * eps)
            denom = max(1e-8, abs(ana_flat[idx]) + abs(numeric))
            rel = abs(ana_flat[idx] - numeric) / denom
            if rel > worst:
                worst = rel
    return worst
