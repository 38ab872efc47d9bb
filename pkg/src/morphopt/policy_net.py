"""Feed-forward policy network evaluated from a flat weight vector.

The architecture is fixed by a :class:`NetworkShape`; the weights live in
one flat float64 vector laid out layer by layer (weight matrix row-major,
then the bias row).  tanh is applied after every affine layer, including
the last, so every action component is bounded in (-1, 1).

There is no training machinery here: the weights are produced by the
search distribution and only ever evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass(frozen=True)
class NetworkShape:
    """Layer sizes of a fully-connected tanh network."""

    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int

    def __post_init__(self) -> None:
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if any(d < 1 for d in dims):
            raise ValueError(f"all layer dims must be >= 1, got {dims}")
        object.__setattr__(self, "hidden_dims", tuple(self.hidden_dims))

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) for each affine layer."""
        dims = [self.input_dim, *self.hidden_dims, self.output_dim]
        return list(zip(dims[:-1], dims[1:]))

    @property
    def parameter_count(self) -> int:
        """Total weight count, biases included: sum of (in+1)*out."""
        return sum((fi + 1) * fo for fi, fo in self.layer_dims)

    def dims_array(self) -> np.ndarray:
        """Layer widths as int64 array, for the numba kernels."""
        return np.array(
            [self.input_dim, *self.hidden_dims, self.output_dim], dtype=np.int64
        )


def _check_weights(shape: NetworkShape, weights: np.ndarray) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] != shape.parameter_count:
        raise ValueError(
            f"weights length {w.shape} does not match "
            f"parameter_count {shape.parameter_count}"
        )
    return w


def unpack(shape: NetworkShape, weights: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split a flat weight vector into per-layer (W, b) views.

    W has shape (fan_in, fan_out) so a forward step is ``x @ W + b``.
    """
    w = _check_weights(shape, weights)
    layers = []
    off = 0
    for fan_in, fan_out in shape.layer_dims:
        mat = w[off : off + fan_in * fan_out].reshape(fan_in, fan_out)
        off += fan_in * fan_out
        bias = w[off : off + fan_out]
        off += fan_out
        layers.append((mat, bias))
    return layers


def pack(shape: NetworkShape, layers: list[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """Inverse of :func:`unpack`; bit-exact round trip."""
    parts = []
    for (mat, bias), (fan_in, fan_out) in zip(layers, shape.layer_dims):
        if mat.shape != (fan_in, fan_out) or bias.shape != (fan_out,):
            raise ValueError("layer arrays do not match the declared shape")
        parts.append(np.asarray(mat, dtype=np.float64).reshape(-1))
        parts.append(np.asarray(bias, dtype=np.float64))
    return np.concatenate(parts)


def forward(shape: NetworkShape, weights: np.ndarray, obs: np.ndarray) -> np.ndarray:
    """Evaluate the policy on one observation.

    Returns the action vector, every component in (-1, 1).
    """
    x = np.asarray(obs, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != shape.input_dim:
        raise ValueError(
            f"observation length {x.shape} does not match input_dim {shape.input_dim}"
        )
    for mat, bias in unpack(shape, weights):
        x = np.tanh(x @ mat + bias)
    return x


@njit(cache=True)
def forward_flat(weights, dims, obs):  # pragma: no cover - exercised via envs
    """Numba twin of :func:`forward` for use inside episode kernels.

    Same layout and math, but summation order is the plain loop below, so
    results can differ from the numpy path in the last few ulps.  Episode
    kernels must use this path exclusively so rollouts stay reproducible.
    """
    x = obs.astype(np.float64)
    off = 0
    for li in range(dims.shape[0] - 1):
        fan_in = dims[li]
        fan_out = dims[li + 1]
        y = np.empty(fan_out, dtype=np.float64)
        for j in range(fan_out):
            acc = weights[off + fan_in * fan_out + j]  # bias
            for i in range(fan_in):
                acc += x[i] * weights[off + i * fan_out + j]
            y[j] = np.tanh(acc)
        off += (fan_in + 1) * fan_out
        x = y
    return x


class MLPPolicy:
    """Callable policy: a shape plus one flat weight vector."""

    def __init__(self, shape: NetworkShape, weights: np.ndarray):
        self.shape = shape
        self.weights = _check_weights(shape, weights)

    def __call__(self, obs: np.ndarray) -> np.ndarray:
        return forward(self.shape, self.weights, obs)
