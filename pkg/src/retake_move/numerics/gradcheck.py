"""Finite-difference gradient checking against a float64 shadow evaluation."""

import numpy as np

from .tensor import Tensor, backward


def relative_error(analytic, numeric, floor=1e-2):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def check_function(fn, inputs, rng, probes=20, h=1e-3, floor=1e-2):
    """Compare analytic gradients of ``sum(fn(*inputs) * r)`` with central differences.

    ``inputs`` are float32 requires-grad tensors (non-tensors pass through).
    The analytic side runs in float32; the numeric side perturbs float64
    copies.  Returns the list of relative errors over the probes.
    """
    out = fn(*inputs)
    weights = rng.normal(size=out.shape)
    loss = (out * Tensor(weights, dtype=out.dtype)).sum()
    backward(loss)

    shadow = [Tensor(x.data, dtype=np.float64) if isinstance(x, Tensor) else x for x in inputs]

    def f64_value():
        return float((fn(*shadow).data.astype(np.float64) * weights).sum())

    targets = [i for i, x in enumerate(inputs) if isinstance(x, Tensor) and x.requires_grad]
    errors = []
    for _ in range(probes):
        ti = targets[rng.integers(len(targets))]
        flat = rng.integers(inputs[ti].data.size)
        idx = np.unravel_index(flat, inputs[ti].shape)
        base = shadow[ti].data[idx]
        shadow[ti].data[idx] = base + h
        up = f64_value()
        shadow[ti].data[idx] = base - h
        down = f64_value()
        shadow[ti].data[idx] = base
        numeric = (up - down) / (2 * h)
        grad = inputs[ti].grad
        analytic = 0.0 if grad is None else float(grad[idx])
        errors.append(relative_error(analytic, numeric, floor))
    return errors
