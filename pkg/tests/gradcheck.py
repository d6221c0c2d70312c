"""Central finite-difference check of analytic network gradients."""

import numpy as np

from neutype.nn import forward, loss_and_grad

STEP = 1e-4
KINK_MARGIN = 1e-3


def _away_from_kinks(params, blocks):
    _, cache = forward(params, blocks)
    return all(np.all(np.abs(z) > KINK_MARGIN)
               for layer, (_, z) in zip(params.layers, cache.records)
               if layer.activation == "relu")


def draw_inputs(params, rng, n, n_classes, tries=200):
    """Random batch whose hidden pre-activations all sit clear of the ReLU kink.

    A difference step that crosses zero measures a one-sided slope, which is
    a property of the probe and not of the backward pass.
    """
    for _ in range(tries):
        blocks = [rng.normal(size=(n, d)) for d in params.topology.input_dims]
        if _away_from_kinks(params, blocks):
            return blocks, rng.integers(0, n_classes, size=n)
    raise RuntimeError("could not draw a batch away from ReLU kinks")


def max_relative_error(params, blocks, y, step=STEP):
    """Worst relative error over every weight and bias component."""
    _, grads = loss_and_grad(params, blocks, y)
    worst = 0.0
    for layer, (dw, db) in zip(params.layers, grads):
        for theta, analytic in ((layer.weights, dw), (layer.bias, db)):
            flat, g = theta.reshape(-1), analytic.reshape(-1)
            for k in range(flat.size):
                orig = flat[k]
                flat[k] = orig + step
                plus, _ = loss_and_grad(params, blocks, y)
                flat[k] = orig - step
                minus, _ = loss_and_grad(params, blocks, y)
                flat[k] = orig
                numeric = (plus - minus) / (2 * step)
                if g[k] == 0.0 and numeric == 0.0:
                    continue
                scale = max(abs(g[k]), abs(numeric), 1e-10)
                worst = max(worst, abs(g[k] - numeric) / scale)
    return worst
