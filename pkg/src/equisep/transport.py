"""Moving functions between equivariant and stabilizer-invariant form.

An equivariant map into R^X is determined by its scalar projections onto
one coordinate per orbit: the projection of coordinate x is invariant
under the stabilizer of x, and an orbit-sum over coset representatives
rebuilds the full map from any one projection.  This module implements
that projection/reconstruction pair, the orbit decomposition it induces,
and two exact grid oracles that lower-bound how well structurally
restricted model families can fit a target.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, NotStabilizerInvariant, SizeCapExceeded
from .groups import GroupAction, act_on_vector, orbits, stabilizer, transversal
from .seeding import child_rng

ORACLE_BUDGET = 2_000_000


@dataclass(frozen=True)
class FunctionHandle:
    """A pure vector-to-vector function with declared arity.

    ``fn`` maps one input vector to an output vector of length
    ``out_dim``; ``batch_fn``, when given, evaluates a whole matrix of
    row vectors at once.
    """

    in_dim: int
    out_dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    batch_fn: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.in_dim,):
            raise DimensionMismatch(f"expected input of length {self.in_dim}")
        return np.asarray(self.fn(v), dtype=float).reshape(self.out_dim)

    def scalar(self, v: np.ndarray) -> float:
        return float(self(v)[0])

    def batch(self, inputs: np.ndarray) -> np.ndarray:
        inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        if self.batch_fn is not None:
            return np.asarray(self.batch_fn(inputs), dtype=float).reshape(
                inputs.shape[0], self.out_dim
            )
        return np.stack([self(row) for row in inputs])


def handle_from_network(net) -> FunctionHandle:
    """Wrap a parameterized network as a FunctionHandle."""
    return FunctionHandle(
        net.arch.in_dim, net.arch.out_dim, lambda v: net(v), batch_fn=net.batch
    )


def project(f: FunctionHandle, x: int) -> FunctionHandle:
    """Scalar handle returning coordinate x of f."""
    if not 0 <= x < f.out_dim:
        raise DimensionMismatch(f"coordinate {x} not in 0..{f.out_dim - 1}")
    batch = None
    if f.batch_fn is not None:
        batch = lambda inputs: f.batch(inputs)[:, [x]]
    return FunctionHandle(f.in_dim, 1, lambda v: f(v)[[x]], batch_fn=batch)


def _check_stabilizer_invariance(
    h: FunctionHandle,
    action: GroupAction,
    x: int,
    domain_action: GroupAction,
    samples: int,
    seed: int,
) -> None:
    """Empirical invariance check: warn above 1e-9, hard error above 1e-6."""
    stab_elements = [
        g for g in range(action.group.order) if action.action_map[g](x) == x
    ]
    points = child_rng(seed, "stabilizer-check").uniform(-1, 1, (samples, h.in_dim))
    worst = 0.0
    base = h.batch(points)[:, 0]
    for g in stab_elements:
        moved = act_on_vector(domain_action, g, points)
        worst = max(worst, float(np.max(np.abs(h.batch(moved)[:, 0] - base))))
    if worst > 1e-6:
        raise NotStabilizerInvariant(
            f"function varies by {worst:.2e} under the stabilizer of {x}"
        )
    if worst > 1e-9:
        warnings.warn(
            f"function varies by {worst:.2e} under the stabilizer of {x}; "
            "reconstruction may be inexact",
            stacklevel=3,
        )


def reconstruct(
    h: FunctionHandle,
    action: GroupAction,
    x: int,
    domain_action: GroupAction | None = None,
    coset_reps: Sequence[int] | None = None,
    check_samples: int = 50,
    check_seed: int = 0,
) -> FunctionHandle:
    """Rebuild an equivariant map on the orbit of x from its coordinate-x projection.

    The returned handle sends v to the vector whose g_i·x entry is
    h(g_i^{-1} v) for coset representatives g_i of the stabilizer of x
    (identity first by default); entries outside the orbit of x are zero.
    ``domain_action`` governs how group elements move inputs of h and
    defaults to ``action`` itself.  h must be invariant under the
    stabilizer of x, which is checked empirically on ``check_samples``
    points.
    """
    domain_action = domain_action if domain_action is not None else action
    if domain_action.group != action.group:
        raise DimensionMismatch("domain action must share the codomain action's group")
    if h.in_dim != domain_action.set_size:
        raise DimensionMismatch("h must consume vectors of the domain set size")
    if check_samples > 0:
        _check_stabilizer_invariance(
            h, action, x, domain_action, check_samples, check_seed
        )
    reps = list(coset_reps) if coset_reps is not None else transversal(action, x)
    targets = [action.action_map[g](x) for g in reps]
    partition = orbits(action)
    orbit_members = partition.orbit_members[partition.orbit_of[x]]
    if len(targets) != len(set(targets)) or set(targets) != set(orbit_members):
        raise DimensionMismatch("coset representatives must hit the orbit of x once each")
    inverses = [domain_action.group.inverse_index(g) for g in reps]
    n_out = action.set_size

    def evaluate(v: np.ndarray) -> np.ndarray:
        out = np.zeros(n_out)
        for g_inv, y in zip(inverses, targets):
            out[y] = h.scalar(act_on_vector(domain_action, g_inv, v))
        return out

    def evaluate_batch(inputs: np.ndarray) -> np.ndarray:
        out = np.zeros((inputs.shape[0], n_out))
        for g_inv, y in zip(inverses, targets):
            moved = act_on_vector(domain_action, g_inv, inputs)
            out[:, y] = h.batch(moved)[:, 0]
        return out

    return FunctionHandle(domain_action.set_size, n_out, evaluate, batch_fn=evaluate_batch)


def decompose(
    f: FunctionHandle,
    action: GroupAction,
    domain_action: GroupAction | None = None,
) -> list[tuple[int, FunctionHandle]]:
    """One scalar component per orbit: (smallest-index representative, projection).

    For equivariant f the reconstruction of the components sums back to
    f; orbits make the output coordinates independent.
    """
    if f.out_dim != action.set_size:
        raise DimensionMismatch("f must produce vectors over the acted-on set")
    return [
        (members[0], project(f, members[0]))
        for members in orbits(action).orbit_members
    ]


def reassemble(
    components: Sequence[tuple[int, FunctionHandle]],
    action: GroupAction,
    domain_action: GroupAction | None = None,
    check_samples: int = 0,
) -> FunctionHandle:
    """Sum of reconstructions of per-orbit components (inverse of decompose)."""
    handles = [
        reconstruct(h, action, x, domain_action=domain_action, check_samples=check_samples)
        for x, h in components
    ]
    in_dim = handles[0].in_dim

    def evaluate(v: np.ndarray) -> np.ndarray:
        return np.sum([h(v) for h in handles], axis=0)

    def evaluate_batch(inputs: np.ndarray) -> np.ndarray:
        return np.sum([h.batch(inputs) for h in handles], axis=0)

    return FunctionHandle(in_dim, action.set_size, evaluate, batch_fn=evaluate_batch)


def power_sum_features(n: int) -> FunctionHandle:
    """v ↦ (p_1(v), …, p_n(v)) with p_k = Σ_i v_i^k; invariant under any reordering."""
    powers = np.arange(1, n + 1)

    def evaluate_batch(inputs: np.ndarray) -> np.ndarray:
        return np.power(inputs[:, :, None], powers[None, None, :]).sum(axis=1)

    return FunctionHandle(
        n, n, lambda v: evaluate_batch(v[None, :])[0], batch_fn=evaluate_batch
    )


# --- grid oracles -------------------------------------------------------------


def grid_centers(resolution: int) -> np.ndarray:
    """Cell centers of a uniform grid on [-1, 1]."""
    return -1.0 + (np.arange(resolution) + 0.5) * (2.0 / resolution)


def _grid_points(resolution: int, n: int) -> np.ndarray:
    if n * resolution**n > ORACLE_BUDGET:
        raise SizeCapExceeded(
            f"grid of {resolution}^{n} points exceeds the oracle budget"
        )
    centers = grid_centers(resolution)
    mesh = np.meshgrid(*([centers] * n), indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def separable_approx_oracle(
    target: FunctionHandle, resolution: int = 64, n: int = 2
) -> float:
    """Least-squares floor for sum-decomposable fits Σ_i g(v_i) of a scalar target.

    The shared profile g is tabulated on the grid's cell centers, which
    on those points is fully general, so the returned residual MSE is a
    certified lower bound for any Σ_i g(v_i) model evaluated there.
    """
    points = _grid_points(resolution, n)
    values = target.batch(points)[:, 0]
    bins = np.rint((points + 1.0) * resolution / 2.0 - 0.5).astype(int)
    design = np.zeros((points.shape[0], resolution))
    for col in range(n):
        np.add.at(design, (np.arange(points.shape[0]), bins[:, col]), 1.0)
    profile, *_ = np.linalg.lstsq(design, values, rcond=None)
    residual = values - design @ profile
    return float(np.mean(residual**2))


def pointwise_approx_oracle(
    target: FunctionHandle, resolution: int = 64, n: int = 2
) -> float:
    """Least-squares floor for coordinate-wise fits (g(v_1), …, g(v_n)) of a vector target.

    The model applies one shared scalar profile g to every coordinate;
    the optimum per tabulated bin is the mean of the target entries that
    read that bin, so the residual MSE is a certified lower bound for
    the width-1 convolution class on the grid.
    """
    points = _grid_points(resolution, n)
    values = target.batch(points)
    if values.shape[1] != n:
        raise DimensionMismatch("pointwise oracle needs a target with out_dim == n")
    bins = np.rint((points + 1.0) * resolution / 2.0 - 0.5).astype(int)
    sums = np.zeros(resolution)
    counts = np.zeros(resolution)
    np.add.at(sums, bins.reshape(-1), values.reshape(-1))
    np.add.at(counts, bins.reshape(-1), 1.0)
    profile = sums / counts
    residual = values - profile[bins]
    return float(np.mean(residual**2))
