"""Groups G_j = Gamma^j x Lambda_j acting on (C^2)^j x R^{N-4j} and their characters.

Gamma is generated by the circle e^{i theta} and rho(z1, z2) = (-conj z2, conj z1).
Every element of Gamma is e^{i theta} rho^f with f in {0, 1}; in real
coordinates it acts on a block as theta_matrix(theta) @ RHO^f. The
character sigma sends e^{i theta} to 1 and rho to -1, and sigma_j is the
product over blocks.

Functions are acted on by apply(g, u) = sigma(g) * (u o g); a field is
sigma-equivariant exactly when it is fixed by every apply(g, .). Elements
whose matrix is a signed permutation (theta a multiple of pi/2, rho, axis
flips and swaps of the trailing block) permute lattice points exactly;
everything else is interpolated with periodic wrap.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, sparse
from scipy.linalg import block_diag
from scipy.stats import ortho_group

from .exceptions import AssumptionViolated, DomainError, ZeroField
from .grid import Field
from .models import AssumptionReport, EquivariantGroup, LambdaMode

logger = logging.getLogger(__name__)

RHO = np.array(
    [
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
    ]
)
QUARTER_TURNS = (0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi)
LATTICE_TOLERANCE = 1e-12


def rho_real_action(v: np.ndarray) -> np.ndarray:
    """rho in real coordinates: (v1, v2, v3, v4) -> (-v3, v4, v1, -v2)."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 2], v[..., 3], v[..., 0], -v[..., 1]], axis=-1)


def theta_matrix(theta: float) -> np.ndarray:
    """Simultaneous rotation by theta in the planes (1,2) and (3,4)."""
    c, s = np.cos(theta), np.sin(theta)
    if abs(c) < LATTICE_TOLERANCE:
        c = 0.0
    if abs(s) < LATTICE_TOLERANCE:
        s = 0.0
    plane = np.array([[c, -s], [s, c]])
    return block_diag(plane, plane)


def theta_real_action(theta: float, v: np.ndarray) -> np.ndarray:
    return np.asarray(v, dtype=float) @ theta_matrix(theta).T


@dataclass(frozen=True, eq=False)
class GroupElement:
    """(gamma_1, ..., gamma_j, eta) with gamma_i = e^{i theta_i} rho^{f_i}."""

    thetas: tuple[float, ...]
    rho_flags: tuple[bool, ...]
    lambda_rotation: np.ndarray | None = None
    trailing_dimension: int = 0
    rho_acts: bool = True

    @classmethod
    def identity(cls, blocks: int, trailing_dimension: int = 0, rho_acts: bool = True) -> "GroupElement":
        return cls((0.0,) * blocks, (False,) * blocks, None, trailing_dimension, rho_acts)

    @property
    def dimension(self) -> int:
        return 4 * len(self.thetas) + self.trailing_dimension

    @property
    def sigma(self) -> int:
        return -1 if sum(self.rho_flags) % 2 else 1

    def block_matrix(self, block: int) -> np.ndarray:
        rotation = theta_matrix(self.thetas[block])
        if self.rho_flags[block] and self.rho_acts:
            return rotation @ RHO
        return rotation

    def trailing_matrix(self) -> np.ndarray:
        if self.lambda_rotation is None:
            return np.eye(self.trailing_dimension)
        return np.asarray(self.lambda_rotation, dtype=float)

    def matrix(self) -> np.ndarray:
        blocks = [self.block_matrix(i) for i in range(len(self.thetas))]
        if self.trailing_dimension:
            blocks.append(self.trailing_matrix())
        return block_diag(*blocks)

    def compose(self, other: "GroupElement") -> "GroupElement":
        """self o other, using rho e^{i theta} = e^{-i theta} rho and rho^2 = e^{i pi}."""
        thetas, flags = [], []
        for t1, f1, t2, f2 in zip(self.thetas, self.rho_flags, other.thetas, other.rho_flags):
            if self.rho_acts:
                theta = t1 + (-t2 if f1 else t2) + (np.pi if f1 and f2 else 0.0)
            else:
                theta = t1 + t2
            thetas.append(float(np.mod(theta, 2.0 * np.pi)))
            flags.append(f1 != f2)
        rotation = None
        if self.lambda_rotation is not None or other.lambda_rotation is not None:
            rotation = self.trailing_matrix() @ other.trailing_matrix()
        return GroupElement(tuple(thetas), tuple(flags), rotation, self.trailing_dimension, self.rho_acts)

    def act(self, points: np.ndarray) -> np.ndarray:
        """Image g x of points given as rows."""
        return np.asarray(points, dtype=float) @ self.matrix().T

    def is_lattice_exact(self) -> bool:
        return _signed_permutation(self.matrix()) is not None


def sigma(g: GroupElement) -> int:
    return g.sigma


def block_element(group: EquivariantGroup, block: int, theta: float, flag: bool) -> GroupElement:
    """Element acting on one block only."""
    thetas = [0.0] * group.j
    flags = [False] * group.j
    thetas[block], flags[block] = theta, flag
    return GroupElement(tuple(thetas), tuple(flags), None, group.trailing_dimension, group.include_rho)


def block_factor(group: EquivariantGroup, block: int, exact: bool = True) -> list[GroupElement]:
    """Finite subgroup of Gamma on one block: quarter turns (exact) or K angles, times {1, rho}."""
    if exact:
        angles = QUARTER_TURNS
    else:
        angles = tuple(2.0 * np.pi * k / group.theta_samples for k in range(group.theta_samples))
    return [block_element(group, block, t, f) for t in angles for f in (False, True)]


def lattice_core(group: EquivariantGroup) -> list[GroupElement]:
    """All 8^j products of quarter turns and rho over the blocks."""
    elements = []
    for choice in itertools.product(itertools.product(QUARTER_TURNS, (False, True)), repeat=group.j):
        thetas = tuple(c[0] for c in choice)
        flags = tuple(c[1] for c in choice)
        elements.append(
            GroupElement(thetas, flags, None, group.trailing_dimension, group.include_rho)
        )
    return elements


def lambda_generators(group: EquivariantGroup) -> list[GroupElement]:
    """Lattice-exact generators of the signed permutations of the trailing coordinates."""
    if not group.lambda_active:
        return []
    d = group.trailing_dimension
    generators = []
    flip = np.eye(d)
    flip[0, 0] = -1.0
    generators.append(flip)
    for a in range(d - 1):
        swap = np.eye(d)
        swap[[a, a + 1]] = swap[[a + 1, a]]
        generators.append(swap)
    identity = GroupElement.identity(group.j, d, group.include_rho)
    return [
        GroupElement(identity.thetas, identity.rho_flags, m, d, group.include_rho)
        for m in generators
    ]


def lambda_rotations(group: EquivariantGroup) -> list[np.ndarray]:
    """Seeded Haar-random orthogonal matrices on the trailing coordinates."""
    d = group.trailing_dimension
    rng = np.random.default_rng(group.lambda_seed)
    return [ortho_group.rvs(d, random_state=rng) for _ in range(group.lambda_samples)]


def sampled_elements(group: EquivariantGroup, exact: bool = True) -> list[GroupElement]:
    """Non-identity elements used to measure equivariance."""
    elements = []
    for block in range(group.j):
        elements.extend(e for e in block_factor(group, block, exact=True) if e.thetas[block] or e.rho_flags[block])
        if not exact:
            elements.append(block_element(group, block, 2.0 * np.pi / group.theta_samples, False))
    elements.extend(lambda_generators(group))
    return elements


def _signed_permutation(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    rounded = np.rint(matrix)
    if not np.allclose(matrix, rounded, atol=LATTICE_TOLERANCE, rtol=0.0):
        return None
    if not np.all(np.sum(np.abs(rounded), axis=1) == 1) or not np.all(
        np.sum(np.abs(rounded), axis=0) == 1
    ):
        return None
    perm = np.argmax(np.abs(rounded), axis=1)
    signs = rounded[np.arange(len(perm)), perm]
    return perm, signs


def _permute_lattice(values: np.ndarray, perm: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """(u o g)[n] for (g x)_a = signs[a] x_{perm[a]}; negation wraps index n to -n mod M."""
    out = values
    for axis in np.flatnonzero(signs < 0):
        out = np.roll(np.flip(out, axis=axis), 1, axis=axis)
    return np.transpose(out, np.argsort(perm))


def _interpolate(u: Field, matrix: np.ndarray, order: int) -> np.ndarray:
    grid = u.grid
    axes = np.meshgrid(*([grid.axis] * grid.dimension), indexing="ij")
    points = np.stack([a.reshape(-1) for a in axes])
    image = matrix @ points
    index = (image + 0.5 * grid.box_length) / grid.spacing
    values = ndimage.map_coordinates(u.values, index, order=order, mode="grid-wrap")
    return values.reshape(grid.shape)


def _check_dimension(g: GroupElement, u: Field) -> None:
    if g.dimension != u.grid.dimension:
        raise DomainError(
            f"group element acts on R^{g.dimension}, field lives on R^{u.grid.dimension}"
        )


def apply(g: GroupElement, u: Field, order: int = 1) -> Field:
    """sigma(g) * (u o g); exact lattice permutation when possible, else interpolation."""
    _check_dimension(g, u)
    matrix = g.matrix()
    exact = _signed_permutation(matrix)
    if exact is not None:
        values = _permute_lattice(u.values, *exact)
    else:
        values = _interpolate(u, matrix, order)
    return Field(u.grid, g.sigma * values)


def _shell_ids(points_per_axis: int, dimension: int) -> np.ndarray:
    offsets = np.arange(points_per_axis) - points_per_axis // 2
    squared = np.zeros((points_per_axis,) * dimension, dtype=np.int64)
    for axis in range(dimension):
        shape = [1] * dimension
        shape[axis] = points_per_axis
        squared = squared + (offsets**2).reshape(shape)
    _, ids = np.unique(squared.reshape(-1), return_inverse=True)
    return ids


def shell_average(values: np.ndarray, first_axis: int) -> np.ndarray:
    """Average over lattice spheres |y| = const in the axes from ``first_axis`` on."""
    shape = values.shape
    m = shape[0]
    d = len(shape) - first_axis
    ids = _shell_ids(m, d)
    n_shells = int(ids.max()) + 1
    onehot = sparse.csr_matrix(
        (np.ones(ids.size), (np.arange(ids.size), ids)), shape=(ids.size, n_shells)
    )
    counts = np.asarray(onehot.sum(axis=0)).reshape(-1)
    flat = values.reshape(-1, m**d)
    means = (onehot.T @ flat.T).T / counts
    return means[:, ids].reshape(shape)


def radial_symmetrize(u: Field) -> Field:
    """Average of u over lattice spheres centred at the origin."""
    return Field(u.grid, shell_average(u.values, 0))


def radial_defect(u: Field) -> float:
    """||u - radial_symmetrize(u)|| / ||u||; zero exactly for lattice-radial fields."""
    norm = u.l2_norm()
    if norm == 0:
        raise ZeroField("radial defect undefined for the zero field")
    return (u - radial_symmetrize(u)).l2_norm() / norm


def _check_group(u: Field, group: EquivariantGroup) -> None:
    if group.ambient_dimension != u.grid.dimension:
        raise DomainError(
            f"group acts on R^{group.ambient_dimension}, field lives on R^{u.grid.dimension}"
        )


def symmetrize(u: Field, group: EquivariantGroup, exact: bool = True, order: int = 1) -> Field:
    """Discrete Haar average (1/|H|) sum_h sigma(h) u o h over a finite subgroup H.

    H is a product over blocks, so the average is taken block by block. The
    trailing factor is handled according to ``group.lambda_mode``.
    """
    _check_group(u, group)
    current = u
    for block in range(group.j):
        factor = block_factor(group, block, exact=exact)
        total = np.zeros(u.grid.shape)
        for element in factor:
            total += apply(element, current, order=order).values
        current = Field(u.grid, total / len(factor))

    if group.lambda_active:
        first_axis = 4 * group.j
        if group.lambda_mode == LambdaMode.RADIAL_CONSTRAINT:
            current = Field(u.grid, shell_average(current.values, first_axis))
        elif group.lambda_mode == LambdaMode.FULL_AVERAGE:
            identity = GroupElement.identity(group.j, group.trailing_dimension, group.include_rho)
            total = current.values.copy()
            for rotation in lambda_rotations(group):
                element = GroupElement(
                    identity.thetas, identity.rho_flags, rotation, group.trailing_dimension, group.include_rho
                )
                total += apply(element, current, order=order).values
            current = Field(u.grid, total / (group.lambda_samples + 1))
    return current


def is_equivariant(
    u: Field, group: EquivariantGroup, tol: float = 1e-8, exact: bool = True
) -> tuple[bool, float]:
    """Largest relative deviation ||apply(g, u) - u|| / ||u|| over sampled elements."""
    _check_group(u, group)
    norm = u.l2_norm()
    if norm == 0:
        raise ZeroField("equivariance undefined for the zero field")
    defect = 0.0
    for element in sampled_elements(group, exact=exact):
        defect = max(defect, (apply(element, u) - u).l2_norm() / norm)
    return defect <= tol, defect


def circle_defect(u: Field, group: EquivariantGroup, order: int = 3) -> float:
    """Relative deviation under the rotation by 2 pi / K in each block, by spline interpolation.

    The lattice core fixes the quarter turns exactly; this measures how far
    u is from invariance under the finer circle angles.
    """
    _check_group(u, group)
    norm = u.l2_norm()
    if norm == 0:
        raise ZeroField("equivariance undefined for the zero field")
    angle = 2.0 * np.pi / group.theta_samples
    defect = 0.0
    for block in range(group.j):
        element = block_element(group, block, angle, False)
        defect = max(defect, (apply(element, u, order=order) - u).l2_norm() / norm)
    return defect


def _orbit_is_continuous(group: EquivariantGroup, point: np.ndarray) -> bool:
    generator = (theta_matrix(1e-6) - np.eye(4)) / 1e-6
    for block in range(group.j):
        if np.linalg.norm(generator @ point[4 * block : 4 * block + 4]) > 1e-9:
            return True
    trailing = point[4 * group.j :]
    return group.lambda_active and group.trailing_dimension >= 2 and np.linalg.norm(trailing) > 0


def _block_character_table(group: EquivariantGroup) -> int:
    """Verify sigma is a well-defined homomorphism on each block's quarter-turn core."""
    pairs = 0
    for block in range(group.j):
        factor = block_factor(group, block, exact=True)
        mats = [e.matrix() for e in factor]
        for a, b in itertools.combinations(range(len(factor)), 2):
            if np.allclose(mats[a], mats[b], atol=1e-12) and factor[a].sigma != factor[b].sigma:
                raise AssumptionViolated(
                    f"sigma is not a function of the group element in block {block}: "
                    f"two elements with the same action carry characters {factor[a].sigma} "
                    f"and {factor[b].sigma}"
                )
        for g, h in itertools.product(range(len(factor)), repeat=2):
            product = mats[g] @ mats[h]
            matches = [k for k, m in enumerate(mats) if np.allclose(m, product, atol=1e-12)]
            if not matches:
                raise AssumptionViolated(f"block {block} core is not closed under composition")
            if any(factor[k].sigma != factor[g].sigma * factor[h].sigma for k in matches):
                raise AssumptionViolated(f"sigma is not multiplicative in block {block}")
            pairs += 1
    if not any(e.sigma < 0 for e in block_factor(group, 0, exact=True)):
        raise AssumptionViolated("sigma is not surjective")
    return pairs


def _stabilizer_is_positive(group: EquivariantGroup, point: np.ndarray) -> bool:
    for block in range(group.j):
        xb = point[4 * block : 4 * block + 4]
        for element in block_factor(group, block, exact=True):
            if np.allclose(element.block_matrix(block) @ xb, xb, atol=1e-12) and element.sigma < 0:
                return False
    return True


def assumption_check(
    group: EquivariantGroup, samples: int = 1000, seed: int = 0, extent: int = 3
) -> AssumptionReport:
    """Check the orbit dichotomy, the witness with positive stabilizer and the character."""
    pairs = _block_character_table(group)

    n = group.ambient_dimension
    rng = np.random.default_rng(seed)
    points = rng.integers(-extent, extent + 1, size=(samples, n)).astype(float)
    points[0] = 0.0

    elements = sampled_elements(group, exact=True)
    continuous = fixed = 0
    for x in points:
        if _orbit_is_continuous(group, x):
            continuous += 1
        elif all(np.allclose(e.act(x), x, atol=1e-12) for e in elements):
            fixed += 1
        else:
            raise AssumptionViolated(
                "orbit is neither continuous nor a fixed point", point=tuple(float(c) for c in x)
            )

    canonical = np.zeros(n)
    canonical[0 : 4 * group.j : 4] = 1.0
    candidates = [canonical] + [
        x for x in points if all(np.any(x[4 * b : 4 * b + 4]) for b in range(group.j))
    ]
    witness = next((x for x in candidates if _stabilizer_is_positive(group, x)), None)
    if witness is None:
        raise AssumptionViolated("no point has a stabilizer inside the kernel of sigma")

    logger.debug(
        f"G_{group.j} on R^{n}: {continuous} continuous orbits, {fixed} fixed points, "
        f"{pairs} character pairs"
    )
    return AssumptionReport(
        passed=True,
        points_checked=samples,
        continuous_orbits=continuous,
        fixed_points=fixed,
        witness=tuple(float(c) for c in witness),
        pairs_checked=pairs,
    )


def distinctness_check(u: Field, v: Field, i: int, j: int) -> bool:
    """A sigma_i- and a sigma_j-equivariant nontrivial field are never equal (i != j)."""
    if i == j:
        raise DomainError("distinctness compares fields under different characters")
    norm_u, norm_v = u.l2_norm(), v.l2_norm()
    if norm_u <= 1e-10 or norm_v <= 1e-10:
        raise ZeroField("distinctness needs two nontrivial fields")
    return (u - v).l2_norm() > 1e-8 * max(norm_u, norm_v)
