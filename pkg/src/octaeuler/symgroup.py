"""Signed-permutation symmetry groups, fundamental domains, and extension rules.

The 3D machinery covers the 24-element rotation group of the octahedron and
its 48-element extension by coordinate reflections; the same code drives the
2D dihedral analogues used by the planar singular-integral experiments.
Fields given on a fundamental cone are extended to all of space by
``y -> g(f(g^{-1} y))``, with a sign flip on orientation-reversing elements
for scalars (and optionally for vectors, which is the vorticity rule).
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "SymmetryError",
    "InvalidGeneratorError",
    "GroupClosureError",
    "OriginUnclassifiableError",
    "IsometryElement",
    "SymmetryGroup",
    "DomainLocator",
    "TIE_BREAK_ETA",
    "TIE_BREAK_WEIGHTS",
    "rotation_generators_3d",
    "reflection_generators_3d",
    "octahedral_group",
    "extended_octahedral_group",
    "rotation_group_2d",
    "axis_reflection_group_2d",
    "extended_group_2d",
    "generate_group",
    "classify_point",
    "signed_permutation_decompose",
    "extend_vector_field",
    "extend_scalar",
    "extended_indicator",
    "group_table_rows",
    "group_table_csv",
]


class SymmetryError(ValueError):
    """Base class for symmetry-machinery failures."""


class InvalidGeneratorError(SymmetryError):
    """A generator is not a signed permutation matrix."""


class GroupClosureError(SymmetryError):
    """Closure under multiplication exceeded the signed-permutation bound."""


class OriginUnclassifiableError(SymmetryError):
    """The origin is fixed by every element and belongs to no domain copy."""


# Deterministic tie-break for points on reflection hyperplanes: perturb by
# eta*(1, 1/2, 1/4, ...) before the strict inequality tests.  Any fixed rule
# works on this measure-zero set; this one is lexicographic and cheap.
TIE_BREAK_ETA = 2.0 ** -40
TIE_BREAK_WEIGHTS = (1.0, 0.5, 0.25)


def _tie_broken(points: np.ndarray) -> np.ndarray:
    dim = points.shape[-1]
    w = np.asarray(TIE_BREAK_WEIGHTS[:dim])
    return points + TIE_BREAK_ETA * w


@dataclass(frozen=True)
class IsometryElement:
    """One signed permutation matrix, stored row-major as an integer tuple."""

    entries: tuple[int, ...]
    dim: int

    @classmethod
    def from_matrix(cls, matrix: Iterable, validate: bool = True) -> "IsometryElement":
        m = np.asarray(matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 3):
            raise InvalidGeneratorError(f"expected a 2x2 or 3x3 matrix, got shape {m.shape}")
        mi = np.rint(m).astype(int)
        if validate:
            if not np.array_equal(mi, m):
                raise InvalidGeneratorError("matrix entries must be integers in {-1, 0, 1}")
            if not np.isin(mi, (-1, 0, 1)).all():
                raise InvalidGeneratorError("matrix entries must lie in {-1, 0, 1}")
            if not np.array_equal(mi.T @ mi, np.eye(mi.shape[0], dtype=int)):
                raise InvalidGeneratorError("matrix is not orthogonal (signed permutation)")
        return cls(entries=tuple(int(v) for v in mi.ravel()), dim=mi.shape[0])

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.entries, dtype=float).reshape(self.dim, self.dim)

    @property
    def parity(self) -> int:
        """+1 for rotations, -1 for orientation-reversing elements."""
        m = np.array(self.entries, dtype=int).reshape(self.dim, self.dim)
        return int(round(np.linalg.det(m)))

    def inverse(self) -> "IsometryElement":
        m = np.array(self.entries, dtype=int).reshape(self.dim, self.dim)
        return IsometryElement.from_matrix(m.T, validate=False)

    def __matmul__(self, other: "IsometryElement") -> "IsometryElement":
        if self.dim != other.dim:
            raise SymmetryError("dimension mismatch in composition")
        a = np.array(self.entries, dtype=int).reshape(self.dim, self.dim)
        b = np.array(other.entries, dtype=int).reshape(self.dim, self.dim)
        return IsometryElement.from_matrix(a @ b, validate=False)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Apply to one point or a batch of row vectors (exact in floats)."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.matrix.T

    def is_identity(self) -> bool:
        return self.entries == tuple(np.eye(self.dim, dtype=int).ravel())


@dataclass(frozen=True)
class SymmetryGroup:
    """A finite group of signed permutations, canonically ordered."""

    elements: tuple[IsometryElement, ...]
    label: str
    dim: int

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[IsometryElement]:
        return iter(self.elements)

    def __contains__(self, g: IsometryElement) -> bool:
        return g in self.elements

    @property
    def matrices(self) -> np.ndarray:
        """Stacked (n, dim, dim) float matrices in canonical order."""
        return np.stack([g.matrix for g in self.elements])

    def identity(self) -> IsometryElement:
        return IsometryElement.from_matrix(np.eye(self.dim, dtype=int), validate=False)


def generate_group(
    generators: Sequence[IsometryElement], label: str = "custom"
) -> SymmetryGroup:
    """Close a generator set under multiplication.

    Element order is canonical (sorted by flattened entries) so that group
    iteration, and hence any quadrature summed over the group, is
    reproducible.
    """
    gens = list(generators)
    if not gens:
        raise InvalidGeneratorError("at least one generator required")
    dim = gens[0].dim
    for g in gens:
        if g.dim != dim:
            raise InvalidGeneratorError("generators must share a dimension")
        IsometryElement.from_matrix(g.matrix)  # re-validate
    bound = (2 ** dim) * {2: 2, 3: 6}[dim]  # |B_dim| = 2^dim * dim!
    ident = IsometryElement.from_matrix(np.eye(dim, dtype=int), validate=False)
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for h in frontier:
            for g in gens:
                prod = g @ h
                if prod not in seen:
                    seen.add(prod)
                    nxt.append(prod)
                    if len(seen) > bound:
                        raise GroupClosureError(
                            f"closure exceeded {bound} elements; generators inconsistent"
                        )
        frontier = nxt
    elements = tuple(sorted(seen, key=lambda g: g.entries))
    return SymmetryGroup(elements=elements, label=label, dim=dim)


def rotation_generators_3d() -> list[IsometryElement]:
    """Quarter-turn rotations about the three coordinate axes."""
    p1 = [[1, 0, 0], [0, 0, -1], [0, 1, 0]]   # (x1, -x3, x2)
    p2 = [[0, 0, 1], [0, 1, 0], [-1, 0, 0]]   # (x3, x2, -x1)
    p3 = [[0, -1, 0], [1, 0, 0], [0, 0, 1]]   # (-x2, x1, x3)
    return [IsometryElement.from_matrix(m) for m in (p1, p2, p3)]


def reflection_generators_3d() -> list[IsometryElement]:
    """Reflections across the coordinate planes x_i = 0."""
    return [
        IsometryElement.from_matrix(np.diag(d))
        for d in ([-1, 1, 1], [1, -1, 1], [1, 1, -1])
    ]


@lru_cache(maxsize=None)
def octahedral_group() -> SymmetryGroup:
    """The 24 rotations preserving the octahedron."""
    g = generate_group(rotation_generators_3d(), label="O")
    assert len(g) == 24
    return g


@lru_cache(maxsize=None)
def extended_octahedral_group() -> SymmetryGroup:
    """All 48 signed permutations: rotations plus coordinate reflections."""
    g = generate_group(
        rotation_generators_3d() + reflection_generators_3d(), label="O-tilde"
    )
    assert len(g) == 48
    return g


@lru_cache(maxsize=None)
def rotation_group_2d() -> SymmetryGroup:
    """Cyclic group of quarter turns in the plane (order 4)."""
    p = IsometryElement.from_matrix([[0, -1], [1, 0]])
    return generate_group([p], label="O-2d")


@lru_cache(maxsize=None)
def axis_reflection_group_2d() -> SymmetryGroup:
    """Reflections across both axes plus the half turn (order 4)."""
    r1 = IsometryElement.from_matrix([[-1, 0], [0, 1]])
    r2 = IsometryElement.from_matrix([[1, 0], [0, -1]])
    return generate_group([r1, r2], label="R-2d")


@lru_cache(maxsize=None)
def extended_group_2d() -> SymmetryGroup:
    """Full dihedral group of the square acting on the plane (order 8)."""
    p = IsometryElement.from_matrix([[0, -1], [1, 0]])
    r1 = IsometryElement.from_matrix([[-1, 0], [0, 1]])
    g = generate_group([p, r1], label="O-tilde-2d")
    assert len(g) == 8
    return g


# Spherical-triangle corners of the fundamental cone {x1 > x2 > x3 > 0}:
# the edge midpoint direction, the corner direction, and the face direction
# of the octahedron.  The boundary half-lines they generate are where the
# cone boundary fails to be smooth.
VERTEX_A2 = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
VERTEX_A3 = np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)
VERTEX_A4 = np.array([1.0, 0.0, 0.0])
HALF_LINE_DIRECTIONS = {"a2": VERTEX_A2, "a3": VERTEX_A3, "a4": VERTEX_A4}


@dataclass(frozen=True)
class DomainLocator:
    """Strict-inequality membership tests for the fundamental domains.

    Supported labels:

    ==========  ===  ==========================================
    label       dim  open domain
    ==========  ===  ==========================================
    U           3    x1 > x3, x2 > x3, x3 > 0
    U-tilde     3    x1 > x2 > x3 > 0
    U2          2    x1 > 0, x2 > 0            (quadrant)
    U2-tilde    2    x1 > x2 > 0               (eighth plane)
    ==========  ===  ==========================================
    """

    domain: str = "U-tilde"

    @property
    def dim(self) -> int:
        return 3 if self.domain in ("U", "U-tilde") else 2

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        x = pts.T
        if self.domain == "U-tilde":
            ok = (x[0] > x[1]) & (x[1] > x[2]) & (x[2] > 0)
        elif self.domain == "U":
            ok = (x[0] > x[2]) & (x[1] > x[2]) & (x[2] > 0)
        elif self.domain == "U2":
            ok = (x[0] > 0) & (x[1] > 0)
        elif self.domain == "U2-tilde":
            ok = (x[0] > x[1]) & (x[1] > 0)
        else:
            raise SymmetryError(f"unknown domain label {self.domain!r}")
        return ok if np.asarray(points).ndim > 1 else bool(ok[0])


def classify_point(
    x: np.ndarray, group: SymmetryGroup, locator: DomainLocator
) -> tuple[IsometryElement, np.ndarray]:
    """Write x = g x0 with x0 in the closed fundamental domain.

    Away from the reflection hyperplanes g is unique; on them the tie-break
    perturbation decides deterministically.  x0 is computed from the exact
    (unperturbed) point, so ``g.apply(x0)`` reproduces x to machine
    precision.
    """
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        raise OriginUnclassifiableError("the origin cannot be classified")
    xt = _tie_broken(x[None, :])[0]
    hits = [g for g in group if locator.contains(g.inverse().apply(xt))]
    if len(hits) != 1:
        raise SymmetryError(
            f"point {x} matched {len(hits)} domain copies; "
            "group and domain are inconsistent"
        )
    g = hits[0]
    return g, g.inverse().apply(x)


def signed_permutation_decompose(points: np.ndarray, mode: str = "O-tilde"):
    """Vectorized classification under the standard (group, domain) pairs.

    Returns ``(x0, signs, rho, det)`` where ``x0`` is the representative in
    the closed fundamental domain and the classified element acts on row
    vectors ``v`` by ``(g v)_j = signs_j * v[rho_j]`` with determinant
    ``det``.  Modes: ``O-tilde``/``O`` in 3D, ``O-tilde-2d``/``R-2d``/``O-2d``
    in 2D.
    """
    pts = np.asarray(points, dtype=float)
    squeeze = pts.ndim == 1
    pts = np.atleast_2d(pts)
    n, dim = pts.shape
    xt = _tie_broken(pts)
    rows = np.arange(n)[:, None]

    if mode in ("O-tilde", "O"):
        s = np.where(xt >= 0, 1.0, -1.0)
        order = np.argsort(-np.abs(xt), axis=1, kind="stable")
        if mode == "O":
            # rotations only: fold the determinant into a first-two swap so
            # that the representative stays in {x1, x2 > x3 > 0}
            p0, p1, p2 = order[:, 0], order[:, 1], order[:, 2]
            perm_sign = np.sign((p1 - p0) * (p2 - p1) * (p2 - p0))
            det = perm_sign * s[:, 0] * s[:, 1] * s[:, 2]
            swap = det < 0
            order[swap, 0], order[swap, 1] = order[swap, 1], order[swap, 0].copy()
        x0 = np.take_along_axis(np.abs(pts), order, axis=1)
        rho = np.empty_like(order)
        rho[rows, order] = np.arange(dim)[None, :]
        p0, p1, p2 = order[:, 0], order[:, 1], order[:, 2]
        perm_sign = np.sign((p1 - p0) * (p2 - p1) * (p2 - p0))
        det = perm_sign * s[:, 0] * s[:, 1] * s[:, 2]
    elif mode == "O-tilde-2d":
        s = np.where(xt >= 0, 1.0, -1.0)
        order = np.argsort(-np.abs(xt), axis=1, kind="stable")
        x0 = np.take_along_axis(np.abs(pts), order, axis=1)
        rho = np.empty_like(order)
        rho[rows, order] = np.arange(dim)[None, :]
        perm_sign = np.where(order[:, 0] == 0, 1.0, -1.0)
        det = perm_sign * s[:, 0] * s[:, 1]
    elif mode == "R-2d":
        s = np.where(xt >= 0, 1.0, -1.0)
        x0 = np.abs(pts)
        rho = np.tile(np.arange(2), (n, 1))
        det = s[:, 0] * s[:, 1]
    elif mode == "O-2d":
        # rotate by multiples of 90 degrees into the open quadrant
        ang = np.arctan2(xt[:, 1], xt[:, 0])
        k = np.floor(ang / (np.pi / 2)).astype(int) % 4  # quadrant index
        # g = P^k with P the quarter turn; g^{-1} x lands in the quadrant
        c = np.array([1.0, 0.0, -1.0, 0.0])[k]
        sn = np.array([0.0, 1.0, 0.0, -1.0])[k]
        x0 = np.stack([c * pts[:, 0] + sn * pts[:, 1],
                       -sn * pts[:, 0] + c * pts[:, 1]], axis=1)
        # encode g via (signs, rho): P^k acts by a signed swap for odd k
        swap = (k % 2).astype(bool)
        rho = np.where(swap[:, None], np.array([1, 0])[None, :],
                       np.array([0, 1])[None, :])
        s1 = np.where(k == 0, 1.0, np.where(k == 1, -1.0, np.where(k == 2, -1.0, 1.0)))
        s2 = np.where(k <= 1, 1.0, -1.0)
        s = np.stack([s1, s2], axis=1)
        det = np.ones(n)
    else:
        raise SymmetryError(f"unknown decomposition mode {mode!r}")

    if squeeze:
        return x0[0], s[0], rho[0], det[0]
    return x0, s, rho, det


_MODE_FOR = {
    ("O-tilde", "U-tilde"): "O-tilde",
    ("O", "U"): "O",
    ("O-tilde-2d", "U2-tilde"): "O-tilde-2d",
    ("R-2d", "U2"): "R-2d",
    ("O-2d", "U2"): "O-2d",
}


def _mode_for(group: SymmetryGroup, locator: DomainLocator) -> str:
    if (group.label, locator.domain) in _MODE_FOR:
        return _MODE_FOR[(group.label, locator.domain)]
    # identify relabeled groups structurally: elements are canonically sorted
    for builder in (
        extended_octahedral_group, octahedral_group, extended_group_2d,
        axis_reflection_group_2d, rotation_group_2d,
    ):
        known = builder()
        if group.elements == known.elements and (
            known.label, locator.domain
        ) in _MODE_FOR:
            return _MODE_FOR[(known.label, locator.domain)]
    raise SymmetryError(
        f"no fast classification for group {group.label!r} on domain "
        f"{locator.domain!r}"
    )


def extend_vector_field(
    domain_evaluator: Callable[[np.ndarray], np.ndarray],
    group: SymmetryGroup,
    locator: DomainLocator | None = None,
    parity: str = "vector",
) -> Callable[[np.ndarray], np.ndarray]:
    """Extend a vector field from the fundamental domain to all of space.

    ``parity="vector"`` applies the bare rule y -> g(f(g^{-1} y)).  For
    vorticity, which transforms as a pseudovector, use
    ``parity="pseudovector"``: orientation-reversing elements then pick up an
    extra factor det(g) = -1, which is what makes the reconstructed velocity
    slip along the reflection walls.
    """
    if locator is None:
        locator = DomainLocator("U-tilde" if group.dim == 3 else "U2-tilde")
    mode = _mode_for(group, locator)
    axial = parity == "pseudovector"
    if parity not in ("vector", "pseudovector"):
        raise SymmetryError(f"unknown parity {parity!r}")

    def evaluate(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        squeeze = pts.ndim == 1
        pts = np.atleast_2d(pts)
        x0, s, rho, det = signed_permutation_decompose(pts, mode)
        v = np.atleast_2d(np.asarray(domain_evaluator(x0), dtype=float))
        out = s * np.take_along_axis(v, rho, axis=1)
        if axial:
            out = out * det[:, None]
        return out[0] if squeeze else out

    return evaluate


def extend_scalar(
    domain_evaluator: Callable[[np.ndarray], np.ndarray],
    group: SymmetryGroup,
    locator: DomainLocator | None = None,
) -> Callable[[np.ndarray], np.ndarray]:
    """Odd scalar extension: f(y) = (-1)^{sgn(g)} f(g^{-1} y)."""
    if locator is None:
        locator = DomainLocator("U-tilde" if group.dim == 3 else "U2-tilde")
    mode = _mode_for(group, locator)

    def evaluate(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        squeeze = pts.ndim == 1
        pts = np.atleast_2d(pts)
        x0, _, _, det = signed_permutation_decompose(pts, mode)
        out = det * np.asarray(domain_evaluator(x0), dtype=float)
        return out[0] if squeeze else out

    return evaluate


def extended_indicator(
    group: SymmetryGroup, locator: DomainLocator | None = None
) -> Callable[[np.ndarray], np.ndarray]:
    """The alternating-sign indicator sum over all domain copies."""
    return extend_scalar(lambda pts: np.ones(len(pts)), group, locator)


def group_table_rows(group: SymmetryGroup) -> list[list[int]]:
    """One row per element: flattened matrix entries plus parity."""
    return [[*g.entries, g.parity] for g in group]


def group_table_csv(group: SymmetryGroup) -> str:
    d = group.dim
    header = [f"m{i+1}{j+1}" for i in range(d) for j in range(d)] + ["parity"]
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in group_table_rows(group):
        buf.write(",".join(str(v) for v in row) + "\n")
    return buf.getvalue()
