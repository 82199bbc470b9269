"""Dense numeric kernels shared by every model.

Matrices are plain 2-D float64 numpy arrays throughout the toolkit. All
public operations keep finite inputs finite; the sigmoid is evaluated in a
branch that never overflows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ParameterError, ShapeError
from .rng import SeededRng


def as_matrix(x) -> np.ndarray:
    """Coerce to a 2-D float64 array."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={a.ndim}")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit shape check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}: inner dimensions differ")
    return a @ b


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function, branching on the sign of x."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def activation(kind: str, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise activation value and derivative at x.

    kind: "relu" or "sigmoid". The relu derivative at exactly 0 is taken as 0.
    """
    x = np.asarray(x, dtype=np.float64)
    if kind == "relu":
        value = np.maximum(x, 0.0)
        deriv = (x > 0).astype(np.float64)
    elif kind == "sigmoid":
        value = sigmoid(x)
        deriv = value * (1.0 - value)
    else:
        raise ParameterError(f"unknown activation kind {kind!r}")
    return value, deriv


def dropout_mask(rng: SeededRng, shape, rate: float) -> np.ndarray:
    """Inverted-dropout mask: 0 with probability `rate`, else 1/(1-rate).

    The mask has elementwise expectation 1, so no rescaling is needed at
    inference time.
    """
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must be in [0, 1), got {rate}")
    keep = rng.random(shape) >= rate
    return keep.astype(np.float64) / (1.0 - rate)


@dataclass
class AdamState:
    """Adam moment estimates for one parameter array.

    Owned by exactly one training loop; `step` mutates it in place.
    """

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: np.ndarray, lr: float = 1e-3) -> "AdamState":
        return cls(m=np.zeros_like(params, dtype=np.float64),
                   v=np.zeros_like(params, dtype=np.float64), lr=lr)


def adam_step(params: np.ndarray, grads: np.ndarray,
              state: AdamState) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update. Returns new params; mutates `state`."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ShapeError(
            f"adam_step shape mismatch: params {params.shape}, grads {grads.shape}, "
            f"moments {state.m.shape}")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return new_params, state


def finite_difference_gradient(f: Callable[[np.ndarray], float], x: np.ndarray,
                               h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function, one coordinate at a time."""
    if h <= 0:
        raise ParameterError(f"step h must be positive, got {h}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = grad.ravel()
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp.ravel()[i] += h
        xm.ravel()[i] -= h
        flat[i] = (f(xp) - f(xm)) / (2.0 * h)
    return grad


def anchored_mean(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Mean along `axis`, exact when all slices are identical.

    Computed as first + mean(rest - first) so that averaging M copies of the
    same array returns that array bitwise, which a plain sum-and-divide does
    not guarantee.
    """
    values = np.asarray(values, dtype=np.float64)
    first = np.take(values, 0, axis=axis)
    return first + (values - np.expand_dims(first, axis)).mean(axis=axis)


def minimize_gd(f_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
                x0: np.ndarray, tol: float = 1e-6,
                max_iter: int = 10_000) -> tuple[np.ndarray, float, int]:
    """Full-batch gradient descent with backtracking line search.

    Deterministic: no randomness, fixed halving/doubling of the step size.
    Stops when the gradient L2 norm drops to `tol` or after `max_iter`
    iterations. Returns (x, gradient norm, iterations used).
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    fx, g = f_and_grad(x)
    step = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        gnorm = float(np.sqrt(np.sum(g * g)))
        if gnorm <= tol:
            return x, gnorm, it - 1
        step = step * 2.0
        while True:
            x_new = x - step * g
            f_new, g_new = f_and_grad(x_new)
            # NaN loss fails the comparison and backtracks too.
            if f_new <= fx - 1e-4 * step * gnorm * gnorm:
                break
            step *= 0.5
            if step < 1e-20:
                # No descent possible at floating-point resolution.
                return x, gnorm, it
        x, fx, g = x_new, f_new, g_new
    return x, float(np.sqrt(np.sum(g * g))), it
