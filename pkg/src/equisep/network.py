"""Networks whose affine layers range over equivariant layer spaces.

A network alternates materialized layer-space elements with a point-wise
activation (none after the last layer).  Parameters are structured per
layer as a coefficient tensor over (output block, input block,
linear-basis index) plus bias coefficients over (output block,
bias-basis index); the dense block matrix is assembled from the layer
space's 0/1 basis on every evaluation, which keeps any parameter setting
exactly equivariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .algebra import LayerSpace
from .errors import (
    ActionMismatch,
    ArchMismatch,
    DivergenceDetected,
    NonFiniteValue,
    ShapeMismatch,
)
from .seeding import child_rng


@dataclass(frozen=True)
class ActivationId:
    """A named scalar activation applied coordinate-wise."""

    name: str
    alpha: float = 0.01  # slope of leaky_relu only

    def __post_init__(self) -> None:
        if self.name not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.name!r}")

    def apply(self, x: np.ndarray) -> np.ndarray:
        return _ACTIVATIONS[self.name][0](x, self.alpha)

    def derivative(self, x: np.ndarray) -> np.ndarray:
        return _ACTIVATIONS[self.name][1](x, self.alpha)


_ACTIVATIONS: dict[str, tuple[Callable, Callable]] = {
    "relu": (lambda x, a: np.maximum(x, 0.0), lambda x, a: (x > 0).astype(float)),
    "leaky_relu": (
        lambda x, a: np.where(x > 0, x, a * x),
        lambda x, a: np.where(x > 0, 1.0, a),
    ),
    "tanh": (lambda x, a: np.tanh(x), lambda x, a: 1.0 - np.tanh(x) ** 2),
    "sigmoid": (
        lambda x, a: 1.0 / (1.0 + np.exp(-x)),
        lambda x, a: (s := 1.0 / (1.0 + np.exp(-x))) * (1.0 - s),
    ),
    "identity": (lambda x, a: x, lambda x, a: np.ones_like(x)),
}

TANH = ActivationId("tanh")
IDENTITY = ActivationId("identity")


@dataclass(frozen=True)
class AffineMap:
    """Dense matrix plus bias vector."""

    matrix: np.ndarray
    bias: np.ndarray

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float) @ self.matrix.T + self.bias


def materialize(
    space: LayerSpace,
    linear_coeffs: Sequence[float],
    bias_coeffs: Sequence[float],
) -> AffineMap:
    """Dense affine map Σ x_i A_i plus bias Σ y_j u_j for the given coefficients."""
    x = np.asarray(linear_coeffs, dtype=float)
    y = np.asarray(bias_coeffs, dtype=float)
    if x.shape != (space.linear_dim,) or y.shape != (space.bias_dim,):
        raise ShapeMismatch(
            f"expected {space.linear_dim} linear and {space.bias_dim} bias coefficients, "
            f"got {x.shape} and {y.shape}"
        )
    matrix = np.tensordot(x, space.linear_dense, axes=1)
    if space.bias_dim:
        bias = y @ space.bias_dense
    else:
        bias = np.zeros(space.codomain_action.set_size)
    return AffineMap(matrix, bias)


@dataclass(frozen=True)
class Architecture:
    """A composable chain of layer spaces with hidden multiplicities.

    Layer i is used at multiplicity (widths[i-1] input copies,
    widths[i] output copies) where widths = [input_multiplicity,
    *multiplicities, output_multiplicity].  The activation acts between
    layers only.
    """

    layer_spaces: tuple[LayerSpace, ...]
    multiplicities: tuple[int, ...]
    activation: ActivationId = TANH
    input_multiplicity: int = 1
    output_multiplicity: int = 1

    def __post_init__(self) -> None:
        if not self.layer_spaces:
            raise ArchMismatch("need at least one layer space")
        if len(self.multiplicities) != len(self.layer_spaces) - 1:
            raise ArchMismatch(
                f"{len(self.layer_spaces)} layers need "
                f"{len(self.layer_spaces) - 1} hidden multiplicities"
            )
        if any(m < 1 for m in self.multiplicities):
            raise ArchMismatch("multiplicities must be >= 1")
        for left, right in zip(self.layer_spaces, self.layer_spaces[1:]):
            if left.codomain_action != right.domain_action:
                raise ActionMismatch(
                    "consecutive layer spaces must share codomain/domain actions"
                )

    @property
    def depth(self) -> int:
        return len(self.layer_spaces)

    @cached_property
    def widths(self) -> tuple[int, ...]:
        return (self.input_multiplicity, *self.multiplicities, self.output_multiplicity)

    @property
    def in_dim(self) -> int:
        return self.widths[0] * self.layer_spaces[0].domain_action.set_size

    @property
    def out_dim(self) -> int:
        return self.widths[-1] * self.layer_spaces[-1].codomain_action.set_size

    def param_shapes(self) -> list[tuple[tuple[int, int, int], tuple[int, int]]]:
        shapes = []
        for i, space in enumerate(self.layer_spaces):
            k, h = self.widths[i], self.widths[i + 1]
            shapes.append(((h, k, space.linear_dim), (h, space.bias_dim)))
        return shapes


@dataclass(frozen=True)
class NetworkParams:
    """Per-layer coefficient tensors (output block, input block, basis index) and biases."""

    coeffs: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def check(self, arch: Architecture) -> None:
        shapes = arch.param_shapes()
        if len(self.coeffs) != len(shapes) or len(self.biases) != len(shapes):
            raise ShapeMismatch("parameter count does not match architecture depth")
        for (c, b), (cs, bs) in zip(zip(self.coeffs, self.biases), shapes):
            if c.shape != cs or b.shape != bs:
                raise ShapeMismatch(f"expected shapes {cs}/{bs}, got {c.shape}/{b.shape}")

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "NetworkParams":
        return NetworkParams(
            tuple(fn(c) for c in self.coeffs), tuple(fn(b) for b in self.biases)
        )

    def flat(self) -> np.ndarray:
        return np.concatenate(
            [a.reshape(-1) for a in self.coeffs] + [a.reshape(-1) for a in self.biases]
        )


def init_params(arch: Architecture, rng: np.random.Generator) -> NetworkParams:
    """Coefficients i.i.d. uniform on [-a, a] with a = 1/sqrt(input blocks × basis size)."""
    coeffs, biases = [], []
    for (h, k, nlin), (_, nbias) in arch.param_shapes():
        a = 1.0 / np.sqrt(max(k * nlin, 1))
        coeffs.append(rng.uniform(-a, a, size=(h, k, nlin)))
        biases.append(rng.uniform(-a, a, size=(h, nbias)))
    return NetworkParams(tuple(coeffs), tuple(biases))


def _layer_dense(
    space: LayerSpace, coeff: np.ndarray, bias: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    h, k, _ = coeff.shape
    ny = space.codomain_action.set_size
    nx = space.domain_action.set_size
    if space.linear_dim:
        w = np.einsum("oib,byx->oyix", coeff, space.linear_dense)
        w = w.reshape(h * ny, k * nx)
    else:
        w = np.zeros((h * ny, k * nx))
    if space.bias_dim:
        b = (bias @ space.bias_dense).reshape(h * ny)
    else:
        b = np.zeros(h * ny)
    return w, b


def dense_layers(arch: Architecture, params: NetworkParams) -> list[AffineMap]:
    """Materialize every layer of a parameterized network."""
    params.check(arch)
    return [
        AffineMap(*_layer_dense(space, c, b))
        for space, c, b in zip(arch.layer_spaces, params.coeffs, params.biases)
    ]


def forward_batch(
    arch: Architecture, params: NetworkParams, inputs: np.ndarray
) -> np.ndarray:
    """Evaluate the network on a batch of rows."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if inputs.shape[1] != arch.in_dim:
        raise ShapeMismatch(f"input length {inputs.shape[1]} != {arch.in_dim}")
    act = inputs
    last = arch.depth - 1
    for i, layer in enumerate(dense_layers(arch, params)):
        pre = act @ layer.matrix.T + layer.bias
        if not np.all(np.isfinite(pre)):
            raise NonFiniteValue(f"non-finite values after layer {i}")
        act = pre if i == last else arch.activation.apply(pre)
    return act


def forward(arch: Architecture, params: NetworkParams, v: np.ndarray) -> np.ndarray:
    """Evaluate the network on a single input vector."""
    return forward_batch(arch, params, np.asarray(v, dtype=float)[None, :])[0]


def loss_and_gradient(
    arch: Architecture,
    params: NetworkParams,
    inputs: np.ndarray,
    targets: np.ndarray,
) -> tuple[float, NetworkParams]:
    """Mean-squared-error loss and its gradient in parameter space.

    The loss is the mean of squared errors over both batch rows and
    output coordinates; gradients are reverse-mode through the dense
    layer assembly.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if inputs.shape[0] != targets.shape[0] or inputs.shape[0] == 0:
        raise ShapeMismatch("batch inputs and targets must align and be nonempty")
    params.check(arch)
    layers = dense_layers(arch, params)
    last = arch.depth - 1

    acts = [inputs]
    pres = []
    a = inputs
    for i, layer in enumerate(layers):
        pre = a @ layer.matrix.T + layer.bias
        pres.append(pre)
        a = pre if i == last else arch.activation.apply(pre)
        acts.append(a)

    out = acts[-1]
    if not np.all(np.isfinite(out)):
        raise NonFiniteValue("non-finite values in forward pass")
    err = out - targets
    loss = float(np.mean(err**2))

    grad_coeffs: list[np.ndarray] = [None] * arch.depth  # type: ignore[list-item]
    grad_biases: list[np.ndarray] = [None] * arch.depth  # type: ignore[list-item]
    d_pre = (2.0 / err.size) * err
    for i in range(last, -1, -1):
        space = arch.layer_spaces[i]
        h, k, _ = params.coeffs[i].shape
        ny = space.codomain_action.set_size
        nx = space.domain_action.set_size
        d_w = d_pre.T @ acts[i]
        d_w4 = d_w.reshape(h, ny, k, nx)
        if space.linear_dim:
            grad_coeffs[i] = np.einsum("oyix,byx->oib", d_w4, space.linear_dense)
        else:
            grad_coeffs[i] = np.zeros((h, k, 0))
        d_b = d_pre.sum(axis=0).reshape(h, ny)
        if space.bias_dim:
            grad_biases[i] = d_b @ space.bias_dense.T
        else:
            grad_biases[i] = np.zeros((h, 0))
        if i > 0:
            d_act = d_pre @ layers[i].matrix
            d_pre = d_act * arch.activation.derivative(pres[i - 1])
    return loss, NetworkParams(tuple(grad_coeffs), tuple(grad_biases))


def gradient(
    arch: Architecture,
    params: NetworkParams,
    inputs: np.ndarray,
    targets: np.ndarray,
) -> NetworkParams:
    """Gradient of the mean-squared-error loss over the batch."""
    return loss_and_gradient(arch, params, inputs, targets)[1]


@dataclass(frozen=True)
class OptimizerConfig:
    """Full-batch Adam settings; the defaults match the experiment harness."""

    learning_rate: float = 1e-2
    iterations: int = 5000
    batch_size: int = 1024
    holdout_size: int = 2048
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    divergence_threshold: float = 1e6

    def to_json(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "iterations": self.iterations,
            "batch_size": self.batch_size,
            "holdout_size": self.holdout_size,
        }

    @staticmethod
    def from_json(obj: dict) -> "OptimizerConfig":
        return OptimizerConfig(
            **{k: obj[k] for k in obj if k in OptimizerConfig.__dataclass_fields__}
        )


@dataclass(frozen=True)
class TrainReport:
    final_mse: float
    mse_curve: np.ndarray
    params: NetworkParams


def train(
    arch: Architecture,
    target,
    optimizer: OptimizerConfig = OptimizerConfig(),
    seed: int = 0,
    domain: tuple[float, float] = (-1.0, 1.0),
) -> TrainReport:
    """Fit the network to a target function on uniform samples of the cube.

    Deterministic given the seed: the training batch, initialization, and
    held-out evaluation sample are drawn from independent derived streams.
    ``final_mse`` is measured on ``holdout_size`` fresh points.
    """
    lo, hi = domain
    batch = child_rng(seed, "train-batch").uniform(
        lo, hi, size=(optimizer.batch_size, arch.in_dim)
    )
    targets = _eval_target(target, batch)
    params = init_params(arch, child_rng(seed, "init"))

    mean = params.map(np.zeros_like)
    var = params.map(np.zeros_like)
    curve = np.empty(optimizer.iterations)
    b1, b2, eps = optimizer.beta1, optimizer.beta2, optimizer.eps
    for step in range(optimizer.iterations):
        loss, grads = loss_and_gradient(arch, params, batch, targets)
        if not np.isfinite(loss) or loss > optimizer.divergence_threshold:
            raise DivergenceDetected(f"loss {loss} at iteration {step}")
        curve[step] = loss
        t = step + 1
        scale = optimizer.learning_rate * np.sqrt(1.0 - b2**t) / (1.0 - b1**t)
        new_c, new_b = [], []
        for idx in range(arch.depth):
            for store, grad_part, cur, out in (
                (0, grads.coeffs[idx], params.coeffs[idx], new_c),
                (1, grads.biases[idx], params.biases[idx], new_b),
            ):
                m = mean.coeffs[idx] if store == 0 else mean.biases[idx]
                v = var.coeffs[idx] if store == 0 else var.biases[idx]
                m[...] = b1 * m + (1 - b1) * grad_part
                v[...] = b2 * v + (1 - b2) * grad_part**2
                out.append(cur - scale * m / (np.sqrt(v) + eps))
        params = NetworkParams(tuple(new_c), tuple(new_b))

    holdout = child_rng(seed, "holdout").uniform(
        lo, hi, size=(optimizer.holdout_size, arch.in_dim)
    )
    pred = forward_batch(arch, params, holdout)
    final = float(np.mean((pred - _eval_target(target, holdout)) ** 2))
    return TrainReport(final, curve, params)


def _eval_target(target, inputs: np.ndarray) -> np.ndarray:
    if callable(getattr(target, "batch", None)):
        return np.asarray(target.batch(inputs), dtype=float)
    return np.stack([np.asarray(target(row), dtype=float) for row in inputs])


@dataclass(frozen=True)
class Network:
    """An architecture with concrete parameters."""

    arch: Architecture
    params: NetworkParams

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return forward(self.arch, self.params, v)

    def batch(self, inputs: np.ndarray) -> np.ndarray:
        return forward_batch(self.arch, self.params, inputs)


def parallelize(nets: Sequence[Network]) -> Network:
    """Stack networks sharing a layer-space sequence into one wide network.

    The first layer becomes a block column of the nets' first layers and
    every later layer a block-diagonal assembly, so the result's output
    is exactly the concatenation of the individual outputs.
    """
    if not nets:
        raise ArchMismatch("need at least one network")
    ref = nets[0].arch
    for net in nets[1:]:
        a = net.arch
        if (
            a.layer_spaces != ref.layer_spaces
            or a.activation != ref.activation
            or a.input_multiplicity != ref.input_multiplicity
        ):
            raise ArchMismatch("networks must share layer spaces, activation, and input width")
    widths = (ref.input_multiplicity,) + tuple(
        sum(net.arch.widths[i] for net in nets) for i in range(1, ref.depth + 1)
    )
    arch = Architecture(
        ref.layer_spaces,
        widths[1:-1],
        ref.activation,
        input_multiplicity=ref.input_multiplicity,
        output_multiplicity=widths[-1],
    )
    coeffs, biases = [], []
    for i, space in enumerate(ref.layer_spaces):
        h, k = widths[i + 1], widths[i]
        c = np.zeros((h, k, space.linear_dim))
        b = np.zeros((h, space.bias_dim))
        row = col = 0
        for net in nets:
            hn, kn = net.arch.widths[i + 1], net.arch.widths[i]
            if i == 0:
                c[row : row + hn, :, :] = net.params.coeffs[i]
            else:
                c[row : row + hn, col : col + kn, :] = net.params.coeffs[i]
            b[row : row + hn, :] = net.params.biases[i]
            row += hn
            col += kn
        coeffs.append(c)
        biases.append(b)
    return Network(arch, NetworkParams(tuple(coeffs), tuple(biases)))
