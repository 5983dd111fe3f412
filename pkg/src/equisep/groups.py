"""Finite permutation groups, actions on finite sets, and orbit/stabilizer algebra.

Groups are held by explicit element enumeration (desk scale, capped at
50 000 elements) so that every orbit, stabilizer, and transversal answer
is exact.  All combinatorics is integer work; floating point enters only
when a permutation acts on a real vector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidPermutation,
    PointOutOfRange,
    SizeCapExceeded,
)

DEFAULT_GROUP_CAP = 50_000
MUL_TABLE_LIMIT = 4096


@dataclass(frozen=True)
class Permutation:
    """Bijection of {0..degree-1}; ``images[i]`` is the image of point i."""

    images: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.images) != list(range(len(self.images))):
            raise InvalidPermutation(f"not a bijection of 0..{len(self.images) - 1}: {self.images}")

    @property
    def degree(self) -> int:
        return len(self.images)

    @staticmethod
    def identity(n: int) -> "Permutation":
        return Permutation(tuple(range(n)))

    @staticmethod
    def from_cycle(cycle: Sequence[int], degree: int) -> "Permutation":
        """Permutation of the given degree mapping each cycle entry to the next."""
        images = list(range(degree))
        for a, b in zip(cycle, tuple(cycle[1:]) + (cycle[0],)):
            images[a] = b
        return Permutation(tuple(images))

    def __call__(self, x: int) -> int:
        return self.images[x]

    def compose(self, other: "Permutation") -> "Permutation":
        """self after other: (self.compose(other))(x) = self(other(x))."""
        if self.degree != other.degree:
            raise InvalidPermutation("degree mismatch in composition")
        return Permutation(tuple(self.images[i] for i in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * self.degree
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(tuple(inv))

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.images))


class FiniteGroup:
    """Finite permutation group stored as an explicit element list.

    Elements are closed under composition and inverse; the element at
    ``identity_index`` is the identity.  A multiplication table is built
    lazily for groups of at most ``MUL_TABLE_LIMIT`` elements.
    """

    def __init__(
        self,
        elements: Sequence[Permutation],
        identity_index: int,
        generator_indices: Sequence[int],
    ) -> None:
        if not elements:
            raise InvalidPermutation("a group needs at least the identity element")
        degrees = {p.degree for p in elements}
        if len(degrees) != 1:
            raise InvalidPermutation("group elements must share one degree")
        self.degree: int = degrees.pop()
        self.elements: tuple[Permutation, ...] = tuple(elements)
        if len(set(self.elements)) != len(self.elements):
            raise InvalidPermutation("duplicate group elements")
        if not self.elements[identity_index].is_identity():
            raise InvalidPermutation("identity_index does not point at the identity")
        self.identity_index: int = identity_index
        self.generator_indices: tuple[int, ...] = tuple(generator_indices)
        self._index: dict[Permutation, int] = {p: i for i, p in enumerate(self.elements)}
        self._mul_table: np.ndarray | None = None
        self._inv_table: tuple[int, ...] | None = None

    @property
    def order(self) -> int:
        return len(self.elements)

    def index_of(self, p: Permutation) -> int:
        try:
            return self._index[p]
        except KeyError:
            raise InvalidPermutation(f"{p.images} is not a group element") from None

    def multiply(self, i: int, j: int) -> int:
        """Index of elements[i] ∘ elements[j]."""
        if self._mul_table is None and self.order <= MUL_TABLE_LIMIT:
            self._build_mul_table()
        if self._mul_table is not None:
            return int(self._mul_table[i, j])
        return self.index_of(self.elements[i].compose(self.elements[j]))

    def inverse_index(self, i: int) -> int:
        if self._inv_table is None:
            self._inv_table = tuple(self.index_of(p.inverse()) for p in self.elements)
        return self._inv_table[i]

    def _build_mul_table(self) -> None:
        n = self.order
        table = np.empty((n, n), dtype=np.int32)
        for i, p in enumerate(self.elements):
            for j, q in enumerate(self.elements):
                table[i, j] = self._index[p.compose(q)]
        self._mul_table = table

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteGroup):
            return NotImplemented
        return self.degree == other.degree and self.elements == other.elements

    def __hash__(self) -> int:
        return hash((self.degree, self.elements))

    def __repr__(self) -> str:
        return f"FiniteGroup(order={self.order}, degree={self.degree})"


def closure(
    generators: Sequence[Permutation], cap: int = DEFAULT_GROUP_CAP
) -> FiniteGroup:
    """Group generated by the given permutations, by breadth-first products.

    Raises SizeCapExceeded if more than ``cap`` elements appear.
    """
    if not generators:
        raise InvalidPermutation("need at least one generator")
    degrees = {g.degree for g in generators}
    if len(degrees) != 1:
        raise InvalidPermutation("generators must share one degree")
    ident = Permutation.identity(degrees.pop())
    seen: dict[Permutation, int] = {ident: 0}
    elements = [ident]
    frontier = [ident]
    while frontier:
        nxt = []
        for p in frontier:
            for g in generators:
                q = g.compose(p)
                if q not in seen:
                    if len(elements) >= cap:
                        raise SizeCapExceeded(f"closure exceeds cap of {cap} elements")
                    seen[q] = len(elements)
                    elements.append(q)
                    nxt.append(q)
        frontier = nxt
    gen_indices = tuple(dict.fromkeys(seen[g] for g in generators))
    return FiniteGroup(elements, 0, gen_indices)


@dataclass(frozen=True)
class GroupAction:
    """A finite group acting on {0..set_size-1} via one permutation per element."""

    group: FiniteGroup
    set_size: int
    action_map: tuple[Permutation, ...]

    def __post_init__(self) -> None:
        if len(self.action_map) != self.group.order:
            raise InvalidPermutation("need one action permutation per group element")
        if any(p.degree != self.set_size for p in self.action_map):
            raise DimensionMismatch("action permutations must have degree |X|")
        if not self.action_map[self.group.identity_index].is_identity():
            raise InvalidPermutation("identity element must act as the identity")

    def act_point(self, g: int, x: int) -> int:
        if not 0 <= x < self.set_size:
            raise PointOutOfRange(f"point {x} not in 0..{self.set_size - 1}")
        return self.action_map[g](x)

    def permutation_matrix(self, g: int) -> np.ndarray:
        """|X|×|X| 0/1 matrix sending the basis vector of x to that of g·x."""
        mat = np.zeros((self.set_size, self.set_size), dtype=np.int64)
        for x, gx in enumerate(self.action_map[g].images):
            mat[gx, x] = 1
        return mat

    @cached_property
    def _generator_images(self) -> tuple[tuple[int, ...], ...]:
        gens = self.group.generator_indices or (self.group.identity_index,)
        return tuple(self.action_map[g].images for g in gens)

    def __repr__(self) -> str:
        return f"GroupAction(|G|={self.group.order}, |X|={self.set_size})"


def act_on_vector(action: GroupAction, g: int, v: np.ndarray) -> np.ndarray:
    """Permute vector entries: output coordinate g·x equals input coordinate x."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != action.set_size:
        raise DimensionMismatch(
            f"vector length {v.shape[-1]} != set size {action.set_size}"
        )
    out = np.empty_like(v)
    out[..., list(action.action_map[g].images)] = v
    return out


@dataclass(frozen=True)
class OrbitPartition:
    """Partition of the acted-on set into orbits."""

    orbit_of: tuple[int, ...]
    orbit_members: tuple[tuple[int, ...], ...]

    @property
    def count(self) -> int:
        return len(self.orbit_members)


def orbits(action: GroupAction) -> OrbitPartition:
    """Orbit partition of the acted-on set, orbit ids ordered by smallest member."""
    n = action.set_size
    orbit_of = [-1] * n
    members: list[tuple[int, ...]] = []
    for start in range(n):
        if orbit_of[start] != -1:
            continue
        oid = len(members)
        stack = [start]
        orbit_of[start] = oid
        found = [start]
        while stack:
            x = stack.pop()
            for images in action._generator_images:
                y = images[x]
                if orbit_of[y] == -1:
                    orbit_of[y] = oid
                    found.append(y)
                    stack.append(y)
        members.append(tuple(sorted(found)))
    return OrbitPartition(tuple(orbit_of), tuple(members))


def _stabilizer_indices(action: GroupAction, x: int) -> list[int]:
    if not 0 <= x < action.set_size:
        raise PointOutOfRange(f"point {x} not in 0..{action.set_size - 1}")
    return [g for g in range(action.group.order) if action.action_map[g](x) == x]


def stabilizer(action: GroupAction, x: int) -> FiniteGroup:
    """Subgroup of all elements fixing x.

    The returned group lists every element as a generator; for the sizes
    handled here that is a valid (if redundant) generating set.
    """
    idx = _stabilizer_indices(action, x)
    elements = [action.group.elements[i] for i in idx]
    identity_pos = idx.index(action.group.identity_index)
    return FiniteGroup(elements, identity_pos, range(len(elements)))


def stabilizer_action(action: GroupAction, x: int) -> GroupAction:
    """The stabilizer of x acting on the same set, by restriction."""
    idx = _stabilizer_indices(action, x)
    sub = stabilizer(action, x)
    return GroupAction(sub, action.set_size, tuple(action.action_map[i] for i in idx))


def restrict_action(action: GroupAction, points: Sequence[int]) -> GroupAction:
    """Restrict an action to an invariant subset, reindexed to 0..len(points)-1."""
    points = sorted(points)
    pos = {p: i for i, p in enumerate(points)}
    maps = []
    for perm in action.action_map:
        try:
            maps.append(Permutation(tuple(pos[perm(p)] for p in points)))
        except KeyError:
            raise PointOutOfRange("subset is not invariant under the action") from None
    return GroupAction(action.group, len(points), tuple(maps))


def transversal(action: GroupAction, x: int) -> list[int]:
    """Coset representatives carrying x onto its orbit, identity first.

    Returns group-element indices g_1..g_t with g_1 the identity and
    {g_i·x} enumerating the orbit of x without repeats (sorted by image
    point after the identity).
    """
    if not 0 <= x < action.set_size:
        raise PointOutOfRange(f"point {x} not in 0..{action.set_size - 1}")
    reps: dict[int, int] = {x: action.group.identity_index}
    for g, perm in enumerate(action.action_map):
        y = perm(x)
        if y not in reps:
            reps[y] = g
    rest = [reps[y] for y in sorted(reps) if y != x]
    return [reps[x]] + rest


def natural_action(group: FiniteGroup) -> GroupAction:
    """The group acting on {0..degree-1} by its own permutations."""
    return GroupAction(group, group.degree, group.elements)


def trivial_action(group: FiniteGroup, set_size: int = 1) -> GroupAction:
    """Every element acts as the identity on a set of the given size."""
    ident = Permutation.identity(set_size)
    return GroupAction(group, set_size, (ident,) * group.order)


def trivial_group(degree: int = 1) -> FiniteGroup:
    return closure([Permutation.identity(degree)])


def symmetric_group(n: int) -> GroupAction:
    """Natural action of S_n on n points."""
    if n < 1:
        raise InvalidPermutation("n must be >= 1")
    if n == 1:
        return natural_action(trivial_group(1))
    gens = [Permutation.from_cycle((0, 1), n)]
    if n > 2:
        gens.append(Permutation.from_cycle(tuple(range(n)), n))
    return natural_action(closure(gens))


def cyclic_shift_action(n: int) -> GroupAction:
    """Z_n shifting n points by x ↦ x+1 mod n."""
    if n < 1:
        raise InvalidPermutation("n must be >= 1")
    if n == 1:
        return natural_action(trivial_group(1))
    shift = Permutation(tuple((i + 1) % n for i in range(n)))
    return natural_action(closure([shift]))


def _direct_product_group(
    a: FiniteGroup, b: FiniteGroup, cap: int
) -> tuple[FiniteGroup, int]:
    """Direct product realized as block-diagonal permutations of degree a.degree+b.degree.

    Pair (g, h) sits at element index g·|B| + h; returns (group, |B|).
    """
    if a.order * b.order > cap:
        raise SizeCapExceeded(f"product group would have {a.order * b.order} > {cap} elements")
    da = a.degree
    elements = []
    for g in a.elements:
        for h in b.elements:
            elements.append(Permutation(g.images + tuple(da + y for y in h.images)))
    identity_index = a.identity_index * b.order + b.identity_index
    gens = [g * b.order + b.identity_index for g in a.generator_indices]
    gens += [a.identity_index * b.order + h for h in b.generator_indices]
    return FiniteGroup(elements, identity_index, gens), b.order


def product_action(
    a: GroupAction, b: GroupAction, cap: int = DEFAULT_GROUP_CAP
) -> GroupAction:
    """Direct product group acting on the Cartesian product set.

    The product set is flattened row-major: pair (x, y) ↦ x·|X_b| + y.
    """
    group, _ = _direct_product_group(a.group, b.group, cap)
    sa, sb = a.set_size, b.set_size
    if sa * sb > cap:
        raise SizeCapExceeded(f"product set would have {sa * sb} > {cap} points")
    maps = []
    for g_perm in a.action_map:
        for h_perm in b.action_map:
            images = [0] * (sa * sb)
            for x in range(sa):
                gx = g_perm(x)
                for y in range(sb):
                    images[x * sb + y] = gx * sb + h_perm(y)
            maps.append(Permutation(tuple(images)))
    return GroupAction(group, sa * sb, tuple(maps))


def sum_action(
    a: GroupAction, b: GroupAction, cap: int = DEFAULT_GROUP_CAP
) -> GroupAction:
    """Direct product group acting block-wise on the disjoint union of the two sets."""
    group, _ = _direct_product_group(a.group, b.group, cap)
    sa = a.set_size
    maps = []
    for g_perm in a.action_map:
        for h_perm in b.action_map:
            images = g_perm.images + tuple(sa + y for y in h_perm.images)
            maps.append(Permutation(images))
    return GroupAction(group, sa + b.set_size, tuple(maps))


def copies_action(action: GroupAction, k: int) -> GroupAction:
    """The same group acting on k stacked copies of the set (block i holds copy i).

    Point (i, x) is flattened as i·|X| + x; the group permutes within blocks.
    """
    if k == 1:
        return action
    s = action.set_size
    maps = []
    for perm in action.action_map:
        images = tuple(i * s + perm(x) for i in range(k) for x in range(s))
        maps.append(Permutation(images))
    return GroupAction(action.group, k * s, tuple(maps))


# --- serialization -----------------------------------------------------------

def action_to_json(action: GroupAction) -> dict:
    """Descriptor {degree, generators, action} for natural and product actions."""
    spec = _action_spec(action)
    gens = [list(action.group.elements[i].images) for i in action.group.generator_indices]
    return {"degree": action.group.degree, "generators": gens, "action": spec}


def _action_spec(action: GroupAction):
    if action.set_size == action.group.degree and action.action_map == action.group.elements:
        return "natural"
    raise ValueError("only natural and product actions are serializable")


def product_action_to_json(a: GroupAction, b: GroupAction) -> dict:
    prod = product_action(a, b)
    gens = [list(prod.group.elements[i].images) for i in prod.group.generator_indices]
    return {
        "degree": prod.group.degree,
        "generators": gens,
        "action": {"product": [action_to_json(a), action_to_json(b)]},
    }


def action_from_json(obj: dict, cap: int = DEFAULT_GROUP_CAP) -> GroupAction:
    spec = obj.get("action", "natural")
    if spec == "natural":
        gens = [Permutation(tuple(images)) for images in obj["generators"]]
        group = closure(gens, cap)
        if group.degree != obj["degree"]:
            raise InvalidPermutation("degree field does not match the generators")
        return natural_action(group)
    if isinstance(spec, dict) and "product" in spec:
        subs = [action_from_json(s, cap) for s in spec["product"]]
        if len(subs) != 2:
            raise ValueError("product descriptor takes exactly two factors")
        return product_action(subs[0], subs[1], cap)
    raise ValueError(f"unknown action descriptor: {spec!r}")


def action_to_json_str(action: GroupAction) -> str:
    return json.dumps(action_to_json(action), sort_keys=True)


def parse_action_spec(spec: str, cap: int = DEFAULT_GROUP_CAP) -> GroupAction:
    """Build an action from a compact string: S4, Z6, T3, or products like Z2xZ2."""
    spec = spec.strip()
    if "x" in spec:
        left, _, right = spec.partition("x")
        return product_action(parse_action_spec(left, cap), parse_action_spec(right, cap), cap)
    kind, num = spec[:1].upper(), spec[1:]
    if not num.isdigit():
        raise ValueError(f"cannot parse group spec {spec!r}")
    n = int(num)
    if kind == "S":
        return symmetric_group(n)
    if kind == "Z":
        return cyclic_shift_action(n)
    if kind == "T":
        return trivial_action(trivial_group(1), n)
    raise ValueError(f"unknown group family {kind!r} in {spec!r}")
