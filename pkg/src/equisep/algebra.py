"""Bases of equivariant linear maps and the affine layer spaces built from them.

An equivariant matrix between two permutation representations is constant
on the orbits of the shared group acting diagonally on (codomain point,
domain point) pairs, so the orbit indicators of that pair action form a
0/1 basis of the commutant.  Layer spaces pair a (possibly restricted)
selection of those matrices with orbit-indicator bias vectors.

Basis matrices are stored as sparse support lists; supports of a full
basis partition the pair set, so every basis here stays 0/1 and mutually
disjoint, including coordinate pushforwards and their orbit splits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import (
    ActionMismatch,
    GroupMismatch,
    NotAPushforward,
    PointOutOfRange,
    SizeCapExceeded,
)
from .groups import (
    GroupAction,
    copies_action,
    natural_action,
    orbits,
    restrict_action,
    stabilizer_action,
    symmetric_group,
    trivial_action,
    trivial_group,
)

Support = tuple[tuple[int, int], ...]

DEFAULT_DIM_CAP = 10_000


def _pair_orbits(domain: GroupAction, codomain: GroupAction) -> list[Support]:
    """Orbits of the diagonal action on (codomain point, domain point) pairs."""
    gens = codomain.group.generator_indices or (codomain.group.identity_index,)
    ny, nx = codomain.set_size, domain.set_size
    seen = np.zeros((ny, nx), dtype=bool)
    supports: list[Support] = []
    for y0 in range(ny):
        for x0 in range(nx):
            if seen[y0, x0]:
                continue
            stack = [(y0, x0)]
            seen[y0, x0] = True
            members = [(y0, x0)]
            while stack:
                y, x = stack.pop()
                for g in gens:
                    pair = (codomain.action_map[g](y), domain.action_map[g](x))
                    if not seen[pair]:
                        seen[pair] = True
                        members.append(pair)
                        stack.append(pair)
            supports.append(tuple(sorted(members)))
    return supports


@dataclass(frozen=True)
class EquivariantBasis:
    """Orbit-indicator basis of all equivariant linear maps domain → codomain."""

    domain_action: GroupAction
    codomain_action: GroupAction
    supports: tuple[Support, ...]

    @property
    def count(self) -> int:
        return len(self.supports)

    def matrices_dense(self) -> np.ndarray:
        """Stack of dense 0/1 matrices, shape (count, |Y|, |X|)."""
        return _supports_dense(
            self.supports, self.codomain_action.set_size, self.domain_action.set_size
        )


def _supports_dense(supports: Sequence[Support], ny: int, nx: int) -> np.ndarray:
    out = np.zeros((len(supports), ny, nx), dtype=float)
    for k, support in enumerate(supports):
        for y, x in support:
            out[k, y, x] = 1.0
    return out


def hom_basis(domain: GroupAction, codomain: GroupAction) -> EquivariantBasis:
    """Basis of the space of equivariant linear maps R^X → R^Y.

    Both actions must share the same group; basis matrices are the orbit
    indicators of the diagonal action on Y×X, ordered by smallest pair.
    """
    if domain.group != codomain.group:
        raise GroupMismatch("hom_basis requires both actions over the same group")
    return EquivariantBasis(domain, codomain, tuple(_pair_orbits(domain, codomain)))


@dataclass(frozen=True)
class FixedSpaceBasis:
    """Orbit indicators 1_{X_j}; they span the vectors constant on orbits."""

    action: GroupAction
    supports: tuple[tuple[int, ...], ...]

    @property
    def count(self) -> int:
        return len(self.supports)

    def vectors_dense(self) -> np.ndarray:
        out = np.zeros((len(self.supports), self.action.set_size), dtype=float)
        for k, support in enumerate(self.supports):
            out[k, list(support)] = 1.0
        return out


def fixed_space(action: GroupAction) -> FixedSpaceBasis:
    """One indicator vector per orbit of the action."""
    return FixedSpaceBasis(action, orbits(action).orbit_members)


@dataclass(frozen=True)
class LayerSpace:
    """A parameterized family of equivariant affine maps.

    The family is {v ↦ Σ x_i A_i v + Σ y_j u_j} where the A_i are the
    stored linear supports and the u_j the bias supports.  Tags record
    which construction produced the space: L, I, C, P, FULL, EXPANDED,
    or PUSHFORWARD.
    """

    domain_action: GroupAction
    codomain_action: GroupAction
    linear_supports: tuple[Support, ...]
    bias_supports: tuple[tuple[int, ...], ...]
    tag: str

    @property
    def linear_dim(self) -> int:
        return len(self.linear_supports)

    @property
    def bias_dim(self) -> int:
        return len(self.bias_supports)

    @property
    def dim(self) -> int:
        return self.linear_dim + self.bias_dim

    @cached_property
    def linear_dense(self) -> np.ndarray:
        """Shape (linear_dim, |Y|, |X|)."""
        return _supports_dense(
            self.linear_supports, self.codomain_action.set_size, self.domain_action.set_size
        )

    @cached_property
    def bias_dense(self) -> np.ndarray:
        """Shape (bias_dim, |Y|)."""
        out = np.zeros((len(self.bias_supports), self.codomain_action.set_size), dtype=float)
        for k, support in enumerate(self.bias_supports):
            out[k, list(support)] = 1.0
        return out

    def contains_identity(self, tol: float = 1e-9) -> bool:
        """True when the identity matrix lies in the span of the linear basis."""
        if self.domain_action.set_size != self.codomain_action.set_size:
            return False
        if self.linear_dim == 0:
            return False
        n = self.domain_action.set_size
        basis = self.linear_dense.reshape(self.linear_dim, -1).T
        target = np.eye(n).reshape(-1)
        coeffs, *_ = np.linalg.lstsq(basis, target, rcond=None)
        return bool(np.max(np.abs(basis @ coeffs - target)) <= tol)

    def to_json(self) -> dict:
        """Sparse export for consumption by external stacks."""
        def action_desc(a: GroupAction) -> dict:
            gens = a.group.generator_indices or (a.group.identity_index,)
            return {
                "set_size": a.set_size,
                "group_order": a.group.order,
                "generator_images": [list(a.action_map[g].images) for g in gens],
            }

        return {
            "tag": self.tag,
            "domain": action_desc(self.domain_action),
            "codomain": action_desc(self.codomain_action),
            "linear_basis": [
                {
                    "shape": [self.codomain_action.set_size, self.domain_action.set_size],
                    "entries": [list(pair) for pair in support],
                }
                for support in self.linear_supports
            ],
            "bias_basis": [
                {"length": self.codomain_action.set_size, "entries": list(support)}
                for support in self.bias_supports
            ],
        }

    def to_json_str(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def layer_full(domain: GroupAction, codomain: GroupAction, tag: str = "FULL") -> LayerSpace:
    """Layer space spanned by the complete equivariant basis plus all orbit biases."""
    basis = hom_basis(domain, codomain)
    bias = fixed_space(codomain)
    return LayerSpace(domain, codomain, basis.supports, bias.supports, tag)


def layer_invariant(action: GroupAction) -> LayerSpace:
    """All invariant affine maps R^X → R: one all-ones row per orbit, plus a scalar bias."""
    codomain = trivial_action(action.group, 1)
    return layer_full(action, codomain, tag="I")


def layer_conv(action: GroupAction) -> LayerSpace:
    """Width-1 convolution: the identity matrix only, plus one bias per orbit."""
    n = action.set_size
    identity_support: Support = tuple((x, x) for x in range(n))
    return LayerSpace(
        action, action, (identity_support,), fixed_space(action).supports, "C"
    )


def layer_pointnet(n: int) -> LayerSpace:
    """Permutation-equivariant layer on n unordered slots: full basis under S_n."""
    action = symmetric_group(n)
    space = layer_full(action, action)
    return replace(space, tag="P")


def layer_linear(group=None) -> LayerSpace:
    """All affine maps R → R, seen as equivariant maps between trivial representations."""
    action = trivial_action(group if group is not None else trivial_group(1), 1)
    space = layer_full(action, action)
    return replace(space, tag="L")


def expand(
    space: LayerSpace, k: int, h: int, cap: int = DEFAULT_DIM_CAP
) -> LayerSpace:
    """Lift a layer space to k input / h output copies.

    The result acts on k stacked copies of the domain and h of the
    codomain; its elements are h×k block matrices with every block in
    the span of the original linear basis, and biases whose h output
    blocks each lie in the span of the original bias basis.  Basis
    ordering is (output block, input block, original index) for the
    linear part and (output block, original index) for the bias part.
    """
    if k < 1 or h < 1:
        raise SizeCapExceeded("multiplicities must be >= 1")
    if k == 1 and h == 1:
        return space
    ny = space.codomain_action.set_size
    nx = space.domain_action.set_size
    if h * ny > cap or k * nx > cap:
        raise SizeCapExceeded(
            f"expanded dimensions {h * ny}×{k * nx} exceed cap {cap}"
        )
    linear: list[Support] = []
    for j in range(h):
        for i in range(k):
            for support in space.linear_supports:
                linear.append(tuple((j * ny + y, i * nx + x) for y, x in support))
    bias: list[tuple[int, ...]] = []
    for j in range(h):
        for support in space.bias_supports:
            bias.append(tuple(j * ny + y for y in support))
    return LayerSpace(
        copies_action(space.domain_action, k),
        copies_action(space.codomain_action, h),
        tuple(linear),
        tuple(bias),
        "EXPANDED",
    )


def pushforward_layer(space: LayerSpace, x: int) -> LayerSpace:
    """Project a layer space onto output coordinate x.

    The result maps the same domain into a 1-point set, everything now
    equivariant under the stabilizer of x in the codomain action.  Its
    linear basis is the x-th row of each basis matrix (duplicates
    merged, zero rows dropped) and its bias basis the x-th entry of each
    bias vector (deduplicated, zeros dropped).
    """
    if not 0 <= x < space.codomain_action.set_size:
        raise PointOutOfRange(f"point {x} not in the codomain set")
    stab = stabilizer_action(space.codomain_action, x)
    sub_indices = [
        g
        for g in range(space.codomain_action.group.order)
        if space.codomain_action.action_map[g](x) == x
    ]
    domain = GroupAction(
        stab.group,
        space.domain_action.set_size,
        tuple(space.domain_action.action_map[i] for i in sub_indices),
    )
    rows: dict[Support, None] = {}
    for support in space.linear_supports:
        row = tuple((0, col) for (y, col) in support if y == x)
        if row:
            rows.setdefault(row)
    bias: dict[tuple[int, ...], None] = {}
    for support in space.bias_supports:
        if x in support:
            bias.setdefault((0,))
    return LayerSpace(
        domain,
        trivial_action(stab.group, 1),
        tuple(rows),
        tuple(bias),
        "PUSHFORWARD",
    )


def orbit_split(space: LayerSpace) -> list[LayerSpace]:
    """Split a pushforward layer along the stabilizer orbits of its domain.

    Each returned component restricts the functionals to one orbit,
    reindexed to 0..|orbit|-1; components whose restricted linear basis
    is empty are dropped.  A singleton-orbit component whose basis is
    the 1×1 identity with a scalar bias is tagged L.
    """
    if space.tag != "PUSHFORWARD" or space.codomain_action.set_size != 1:
        raise NotAPushforward("orbit_split takes the output of pushforward_layer")
    parts: list[LayerSpace] = []
    for members in orbits(space.domain_action).orbit_members:
        pos = {p: i for i, p in enumerate(members)}
        linear: list[Support] = []
        for support in space.linear_supports:
            restricted = tuple((0, pos[col]) for (_, col) in support if col in pos)
            if restricted:
                linear.append(restricted)
        if not linear:
            continue
        domain = restrict_action(space.domain_action, members)
        codomain = space.codomain_action
        is_linear_tag = (
            len(members) == 1
            and linear == [((0, 0),)]
            and space.bias_supports == ((0,),)
        )
        parts.append(
            LayerSpace(
                domain,
                codomain,
                tuple(linear),
                space.bias_supports,
                "L" if is_linear_tag else "PUSHFORWARD",
            )
        )
    return parts


# --- independent commutant oracle --------------------------------------------

def _exact_rank(rows: list[list[int]]) -> int:
    """Rank of an integer matrix by fraction-free Gaussian elimination."""
    rows = [row[:] for row in dict.fromkeys(tuple(r) for r in rows) if any(row)]
    if not rows:
        return 0
    ncols = len(rows[0])
    rank = 0
    col = 0
    while rank < len(rows) and col < ncols:
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col]), None)
        if pivot is None:
            col += 1
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        pivot_val = rows[rank][col]
        for r in range(rank + 1, len(rows)):
            if rows[r][col]:
                factor = rows[r][col]
                rows[r] = [
                    pivot_val * a - factor * b for a, b in zip(rows[r], rows[rank])
                ]
        rank += 1
        col += 1
    return rank


def commutant_dimension_bruteforce(domain: GroupAction, codomain: GroupAction) -> int:
    """Dimension of {A : P_g A = A P_g for all generators g}, by exact elimination.

    Independent of the orbit-counting route: builds the sparse linear
    constraints A[g·y, g·x] = A[y, x] entry by entry and computes the
    solution-space dimension with integer arithmetic.
    """
    if domain.group != codomain.group:
        raise GroupMismatch("both actions must share the same group")
    ny, nx = codomain.set_size, domain.set_size
    gens = codomain.group.generator_indices or (codomain.group.identity_index,)
    rows: list[list[int]] = []
    for g in gens:
        perm_y = codomain.action_map[g]
        perm_x = domain.action_map[g]
        for y in range(ny):
            for x in range(nx):
                lhs = perm_y(y) * nx + perm_x(x)
                rhs = y * nx + x
                if lhs == rhs:
                    continue
                row = [0] * (ny * nx)
                row[lhs] += 1
                row[rhs] -= 1
                rows.append(row)
    return ny * nx - _exact_rank(rows)
