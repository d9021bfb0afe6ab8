"""Linear-triangle plane-strain FEM on a clamped square with a loaded hole.

The domain is the square ``[-L/2, L/2]^2`` minus the disk of radius ``a``.
The outer square is clamped and the hole boundary carries a traction that
represents a concentrated couple or a center of dilatation.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from matplotlib.tri import Triangulation

from . import greens
from .moduli import CubicModuli

log = logging.getLogger(__name__)


class MeshError(ValueError):
    pass


class LoadError(RuntimeError):
    pass


class SolverError(RuntimeError):
    pass


class OutsideDomain(ValueError):
    pass


# -- material ----------------------------------------------------------------


def cubic_to_plane_stiffness(m: CubicModuli) -> np.ndarray:
    """3x3 matrix mapping ``(e11, e22, 2 e12)`` to ``(s11, s22, s12)``."""
    a = m.lam + 2.0 * m.mu
    return np.array([[a, m.lam, 0.0], [m.lam, a, 0.0], [0.0, 0.0, m.mu_star]])


def check_plane_stiffness(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.shape != (3, 3) or not np.allclose(c, c.T, rtol=1e-12, atol=0.0):
        raise ValueError("plane stiffness must be a symmetric 3x3 matrix")
    if np.linalg.eigvalsh(c)[0] <= 0:
        raise ValueError("plane stiffness must be positive definite")
    return c


# -- mesh --------------------------------------------------------------------


@dataclass(frozen=True)
class Mesh:
    nodes: np.ndarray  # (n, 2)
    triangles: np.ndarray  # (m, 3), counter-clockwise
    inner_edges: np.ndarray  # (k, 2), hole boundary, ordered by angle
    outer_edges: np.ndarray  # (l, 2)
    side: float
    radius: float
    h: float

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def inner_nodes(self) -> np.ndarray:
        return np.unique(self.inner_edges)

    @property
    def outer_nodes(self) -> np.ndarray:
        return np.unique(self.outer_edges)

    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def quality(self) -> np.ndarray:
        """``2 r_in / r_circ`` per triangle (1 for equilateral)."""
        p = self.nodes[self.triangles]
        la = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
        lb = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
        lc = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
        area = np.abs(self.areas())
        s = 0.5 * (la + lb + lc)
        r_in = area / s
        r_circ = la * lb * lc / (4.0 * area)
        return 2.0 * r_in / r_circ


def generate_mesh(side: float, radius: float, h: float, n_radial: int | None = None) -> Mesh:
    """Graded O-grid triangulation of the square minus a central disk.

    ``h`` is the element size on the hole. The number of hole segments is
    rounded up to a multiple of 16 so the mesh has the full symmetry of the
    square. Rings are spaced geometrically along each ray so the elements
    stay close to isotropic, growing from ``h`` at the hole to roughly
    ``h * L / (2 a)`` at the boundary.
    """
    if not (side > 0 and radius > 0 and h > 0):
        raise MeshError("side, radius and h must be positive")
    if not 2.0 * radius < side:
        raise MeshError(f"hole diameter {2 * radius} must be smaller than side {side}")
    if not h < radius:
        raise MeshError(f"mesh size h={h} must be smaller than the hole radius {radius}")

    n_theta = 16 * math.ceil(2.0 * math.pi * radius / h / 16.0)
    # n_theta divisible by 16 puts nodes on both axes and both diagonals
    i = np.arange(n_theta)
    theta = 2.0 * math.pi * i / n_theta
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    ray = 0.5 * side / np.maximum(np.abs(cos_t), np.abs(sin_t))
    if n_radial is None:
        n_radial = max(2, round(n_theta * math.log(0.5 * side / radius) / (2.0 * math.pi)))
    k = np.arange(n_radial + 1)[:, None] / n_radial
    rho = radius * (ray[None, :] / radius) ** k  # (n_radial+1, n_theta)
    x = rho * cos_t[None, :]
    y = rho * sin_t[None, :]
    # snap boundary nodes exactly onto the square
    x[-1] = np.where(np.abs(cos_t) >= np.abs(sin_t) - 1e-12, np.sign(cos_t) * 0.5 * side, x[-1])
    y[-1] = np.where(np.abs(sin_t) >= np.abs(cos_t) - 1e-12, np.sign(sin_t) * 0.5 * side, y[-1])
    nodes = np.column_stack([x.ravel(), y.ravel()])

    def nid(kk, ii):
        return kk * n_theta + ii % n_theta

    kk, ii = np.meshgrid(np.arange(n_radial), np.arange(n_theta), indexing="ij")
    kk, ii = kk.ravel(), ii.ravel()
    a0, a1 = nid(kk, ii), nid(kk, ii + 1)
    b0, b1 = nid(kk + 1, ii), nid(kk + 1, ii + 1)
    # alternate the diagonal per octant to keep reflection symmetry
    octant = ii // (n_theta // 8)
    even = octant % 2 == 0
    t1 = np.where(even[:, None], np.column_stack([a0, a1, b1]), np.column_stack([a0, a1, b0]))
    t2 = np.where(even[:, None], np.column_stack([a0, b1, b0]), np.column_stack([a1, b1, b0]))
    tris = np.empty((2 * len(kk), 3), dtype=np.int64)
    tris[0::2] = t1
    tris[1::2] = t2
    tris = tris[:, [0, 2, 1]]  # ring-then-outward ordering is clockwise

    inner = np.column_stack([nid(0, i), nid(0, i + 1)])
    outer = np.column_stack([nid(n_radial, i), nid(n_radial, i + 1)])
    mesh = Mesh(nodes, tris, inner, outer, float(side), float(radius), float(h))
    if np.any(mesh.areas() <= 0):
        raise MeshError("mesh generation produced inverted triangles")
    return mesh


# -- assembly ----------------------------------------------------------------


def _element_gradients(mesh: Mesh):
    """Shape-function gradients ``(m, 3, 2)`` and areas ``(m,)`` of all triangles."""
    p = mesh.nodes[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    area = mesh.areas()
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    grad = np.stack([b, c], axis=2) / (2.0 * area[:, None, None])
    return grad, area


def strain_matrices(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Constant-strain ``B`` matrices ``(m, 3, 6)`` and element areas."""
    grad, area = _element_gradients(mesh)
    B = np.zeros((len(area), 3, 6))
    B[:, 0, 0::2] = grad[:, :, 0]
    B[:, 1, 1::2] = grad[:, :, 1]
    B[:, 2, 0::2] = grad[:, :, 1]
    B[:, 2, 1::2] = grad[:, :, 0]
    return B, area


def element_dofs(mesh: Mesh) -> np.ndarray:
    t = mesh.triangles
    return np.stack([2 * t, 2 * t + 1], axis=2).reshape(len(t), 6)


def assemble(mesh: Mesh, c: np.ndarray) -> sp.csr_matrix:
    """Global stiffness (interleaved dofs ``2i, 2i+1``), before boundary conditions."""
    c = check_plane_stiffness(c)
    B, area = strain_matrices(mesh)
    ke = area[:, None, None] * np.einsum("eki,kl,elj->eij", B, c, B)
    dofs = element_dofs(mesh)
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    n = 2 * mesh.n_nodes
    K = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    return K


# -- loads -------------------------------------------------------------------


class LoadMode(enum.Enum):
    ANALYTIC = "analytic-traction"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class LoadSpec:
    kind: greens.Kind
    mode: LoadMode = LoadMode.ANALYTIC

    def __post_init__(self):
        object.__setattr__(self, "kind", greens.Kind(self.kind))
        object.__setattr__(self, "mode", LoadMode(self.mode))
        if self.kind not in (greens.Kind.COUPLE, greens.Kind.DILATATION):
            raise ValueError("hole loads are couple or dilatation")


@dataclass(frozen=True)
class Resultants:
    force: np.ndarray
    moment: float
    l1: float


def load_resultants(mesh: Mesh, f: np.ndarray) -> Resultants:
    fn = f.reshape(-1, 2)
    x = mesh.nodes
    moment = float(np.sum(x[:, 0] * fn[:, 1] - x[:, 1] * fn[:, 0]))
    return Resultants(fn.sum(axis=0), moment, float(np.abs(f).sum()))


def uniform_traction(m: CubicModuli, kind, a: float, theta) -> np.ndarray:
    """Uniform tangential shear of unit moment, or a uniform pressure.

    The pressure equals the angular mean of the radial component of the
    analytic dilatation traction, which is ``mu / (2 pi (mu + kappa) a^2)``
    for an isotropic material.
    """
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    if greens.Kind(kind) is greens.Kind.COUPLE:
        tau = 1.0 / (2.0 * math.pi * a * a)
        return np.stack([-tau * s, tau * c])
    th = 2.0 * math.pi * (np.arange(720) + 0.5) / 720
    t = greens.traction_on_circle(m, kind, a, th)
    p = float(np.mean(t[0] * np.cos(th) + t[1] * np.sin(th)))
    return np.stack([p * c, p * s])


_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(2)


def apply_load(mesh: Mesh, m: CubicModuli, spec: LoadSpec, tol: float = 1e-6) -> np.ndarray:
    """Consistent nodal loads of the hole traction.

    Each hole edge is integrated over its circular arc with 2-point Gauss
    quadrature against the linear shape functions. The couple load is
    rescaled so the discrete resultant moment is exactly one, since the
    polygonal hole loses O(h^2) of the arc moment.
    """
    spec = LoadSpec(spec.kind, spec.mode)
    a = mesh.radius
    e = mesh.inner_edges
    p0, p1 = mesh.nodes[e[:, 0]], mesh.nodes[e[:, 1]]
    th0 = np.arctan2(p0[:, 1], p0[:, 0])
    dth = np.mod(np.arctan2(p1[:, 1], p1[:, 0]) - th0, 2.0 * math.pi)
    traction = greens.traction_on_circle if spec.mode is LoadMode.ANALYTIC else uniform_traction
    f = np.zeros(2 * mesh.n_nodes)
    for xg, wg in zip(_GAUSS_X, _GAUSS_W):
        xi = 0.5 * (xg + 1.0)
        th = th0 + xi * dth
        t = traction(m, spec.kind, a, th)  # (2, k)
        w = 0.5 * wg * a * dth
        for node, n_val in ((e[:, 0], 1.0 - xi), (e[:, 1], xi)):
            np.add.at(f, 2 * node, w * n_val * t[0])
            np.add.at(f, 2 * node + 1, w * n_val * t[1])

    res = load_resultants(mesh, f)
    if spec.kind is greens.Kind.COUPLE:
        f /= res.moment
        res = load_resultants(mesh, f)
        ok = abs(res.moment - 1.0) < tol
    else:
        ok = abs(res.moment) < tol * res.l1
    ok = ok and np.all(np.abs(res.force) < tol * res.l1)
    if not ok:
        raise LoadError(f"hole load resultant check failed: force={res.force}, moment={res.moment}")
    return f


# -- solve / evaluate --------------------------------------------------------


class System:
    """Stiffness with the outer-boundary dofs eliminated; the LU factor is cached."""

    def __init__(self, mesh: Mesh, K: sp.csr_matrix):
        self.mesh = mesh
        self.K = K
        fixed = np.zeros(2 * mesh.n_nodes, dtype=bool)
        fixed[2 * mesh.outer_nodes] = True
        fixed[2 * mesh.outer_nodes + 1] = True
        self.fixed = np.flatnonzero(fixed)
        self.free = np.flatnonzero(~fixed)
        self.K_free = K[self.free][:, self.free].tocsc()
        self._lu = None

    @property
    def n_free(self) -> int:
        return len(self.free)

    def factor(self):
        if self._lu is None:
            try:
                self._lu = spla.splu(self.K_free, permc_spec="MMD_AT_PLUS_A")
            except RuntimeError as exc:  # exactly singular pivot
                raise SolverError(f"factorization failed: {exc}") from exc
        return self._lu


def build_system(mesh: Mesh, c: np.ndarray) -> System:
    return System(mesh, assemble(mesh, c))


@dataclass
class DisplacementField:
    mesh: Mesh
    u: np.ndarray  # (n_nodes, 2)
    info: dict = field(default_factory=dict)
    _tri: Triangulation | None = field(default=None, repr=False)

    def _finder(self):
        if self._tri is None:
            self._tri = Triangulation(self.mesh.nodes[:, 0], self.mesh.nodes[:, 1], self.mesh.triangles)
        return self._tri.get_trifinder()

    def evaluate(self, points, strict: bool = True) -> np.ndarray:
        """Piecewise-linear interpolation at ``points`` (shape ``(n, 2)``).

        Points outside the mesh raise :class:`OutsideDomain`, or give NaN rows
        when ``strict`` is false.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tri = self._finder()(pts[:, 0], pts[:, 1])
        out = np.full((len(pts), 2), np.nan)
        inside = tri >= 0
        if strict and not inside.all():
            bad = pts[~inside][0]
            raise OutsideDomain(f"{int((~inside).sum())} point(s) outside the mesh, e.g. {bad}")
        t = self.mesh.triangles[tri[inside]]
        p = self.mesh.nodes[t]
        q = pts[inside]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        r = q - p[:, 0]
        l1 = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / det
        l2 = (d1[:, 0] * r[:, 1] - d1[:, 1] * r[:, 0]) / det
        l0 = 1.0 - l1 - l2
        out[inside] = l0[:, None] * self.u[t[:, 0]] + l1[:, None] * self.u[t[:, 1]] + l2[:, None] * self.u[t[:, 2]]
        return out

    def __call__(self, x1, x2) -> np.ndarray:
        """Field-evaluator contract shared with the analytic solutions: ``(2, n)``."""
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        u = self.evaluate(np.column_stack([x1.ravel(), x2.ravel()]))
        return u.T.reshape((2,) + x1.shape)


def solve(system: System, f: np.ndarray, outer=None, rtol: float = 1e-10) -> DisplacementField:
    """Solve ``K u = f`` with the outer boundary clamped.

    ``outer`` optionally prescribes the outer-boundary displacement instead of
    zero: an array ``(n_nodes, 2)`` (only boundary rows are used) or a
    callable ``outer(x1, x2) -> (2, n)``.
    """
    mesh = system.mesh
    u = np.zeros(2 * mesh.n_nodes)
    if outer is not None:
        nodes = mesh.outer_nodes
        if callable(outer):
            ub = np.asarray(outer(mesh.nodes[nodes, 0], mesh.nodes[nodes, 1])).T
        else:
            ub = np.asarray(outer, dtype=float)[nodes]
        u[2 * nodes] = ub[:, 0]
        u[2 * nodes + 1] = ub[:, 1]
    rhs = f[system.free] - system.K[system.free][:, system.fixed] @ u[system.fixed]
    norm = np.linalg.norm(rhs)
    if norm == 0.0:
        return DisplacementField(mesh, u.reshape(-1, 2), {"residual": 0.0, "dofs": system.n_free})
    lu = system.factor()
    Kf = system.K_free
    uf = lu.solve(rhs)
    if not np.all(np.isfinite(uf)):
        raise SolverError("factorization produced non-finite values (singular system?)")
    resid = np.linalg.norm(Kf @ uf - rhs) / norm
    if resid > rtol:
        uf += lu.solve(rhs - Kf @ uf)  # one step of iterative refinement
        resid = np.linalg.norm(Kf @ uf - rhs) / norm
    if resid > rtol:
        d = Kf.diagonal()
        raise SolverError(f"relative residual {resid:.3e} > {rtol:.1e}; diag range [{d.min():.3e}, {d.max():.3e}]")
    u[system.free] = uf
    return DisplacementField(mesh, u.reshape(-1, 2), {"residual": float(resid), "dofs": system.n_free})


def solve_hole_problem(
    mesh: Mesh, m: CubicModuli, spec: LoadSpec, system: System | None = None, outer=None
) -> DisplacementField:
    """Assemble, load and solve one couple or dilatation problem."""
    if system is None:
        system = build_system(mesh, cubic_to_plane_stiffness(m))
    f = apply_load(mesh, m, spec)
    field_ = solve(system, f, outer=outer)
    field_.info["work"] = float(f @ field_.u.ravel())
    return field_
