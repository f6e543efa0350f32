"""Polyhedral calculus in R^d.

Convex polyhedra are carried in two representations:

  * H-representation: ``{x : B x >= b}`` with ``B`` an (m, d) matrix.
  * V-representation: convex hull of finitely many points plus the conic
    hull of finitely many rays.

Conversions between the two run through a single primitive: extreme-ray
enumeration of a polyhedral cone ``{x : A x >= 0}`` by the incremental
double description method.  H->V lifts the polyhedron to a cone in d+1
variables; V->H dualizes the homogenized generators.  Both directions
therefore emit irredundant output.

Tolerances: 1e-9 absolute on residuals of normalized rows, 1e-7 relative
for deduplication of vertices and rays.  Rays and H-rep rows are scaled
to unit max-norm; points are never rescaled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ATOL = 1e-9
DEDUP_RTOL = 1e-7


class GeometryError(ValueError):
    """Malformed geometric input (dimension mismatch, NaN entries, ...)."""


class EmptyPolyhedronError(GeometryError):
    """Raised when an operation requires a nonempty polyhedron."""


def as_matrix(data, cols=None):
    a = np.atleast_2d(np.asarray(data, dtype=float))
    if a.size and not np.all(np.isfinite(a)):
        raise GeometryError("matrix entries must be finite")
    if cols is not None and a.shape[1] != cols:
        raise GeometryError(f"expected {cols} columns, got {a.shape[1]}")
    return a


def as_vector(data, size=None):
    v = np.asarray(data, dtype=float).reshape(-1)
    if v.size and not np.all(np.isfinite(v)):
        raise GeometryError("vector entries must be finite")
    if size is not None and v.size != size:
        raise GeometryError(f"expected length {size}, got {v.size}")
    return v


def _unit(v):
    """Scale to unit max-norm; zero vectors are returned unchanged."""
    m = np.max(np.abs(v))
    return v / m if m > 0 else v


def _dedup(vectors, rtol=DEDUP_RTOL):
    """Order-preserving dedup of float vectors under relative tolerance."""
    kept = []
    for v in vectors:
        scale = max(1.0, float(np.max(np.abs(v)))) if len(v) else 1.0
        if any(np.max(np.abs(v - w)) <= rtol * scale for w in kept):
            continue
        kept.append(v)
    return kept


def _lexsorted(vectors):
    return sorted(vectors, key=lambda v: tuple(np.round(v, 12)))


# ---------------------------------------------------------------------------
# Double description core
# ---------------------------------------------------------------------------

def _extreme_rays_2d(A, atol=ATOL):
    """Planar special case of extreme-ray enumeration, fully vectorized.

    Candidate rays are the rotated row normals; the pointed case keeps the
    two angular extremes of the feasible candidates.
    """
    scales = np.max(np.abs(A), axis=1)
    rows = A[scales > atol] / scales[scales > atol, None]
    if rows.shape[0] == 0:
        return [], [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    n0 = rows[0]
    cross = rows[:, 0] * n0[1] - rows[:, 1] * n0[0]
    if np.all(np.abs(cross) <= 1e-9):
        signs = rows @ n0
        line = np.array([-n0[1], n0[0]])
        if np.all(signs > 0):
            return [_unit(n0)], [line]
        return [], [line]
    cands = np.vstack([
        np.column_stack([-rows[:, 1], rows[:, 0]]),
        np.column_stack([rows[:, 1], -rows[:, 0]]),
    ])
    feas = np.all(rows @ cands.T >= -atol, axis=0)
    cands = cands[feas]
    if cands.shape[0] == 0:
        return [], []
    ref = cands[0]
    ref_perp = np.array([-ref[1], ref[0]])
    ang = np.arctan2(cands @ ref_perp, cands @ ref)
    lo, hi = int(np.argmin(ang)), int(np.argmax(ang))
    out = [_unit(cands[lo])]
    if np.max(np.abs(_unit(cands[hi]) - out[0])) > DEDUP_RTOL:
        out.append(_unit(cands[hi]))
    return _lexsorted(out), []


def extreme_rays(A, atol=ATOL):
    """Extreme rays and lineality basis of the cone ``{x : A x >= 0}``.

    Returns ``(rays, lineality)``: rays are unit max-norm and irredundant;
    the lineality vectors span the lineality space of the cone.  Insertion
    follows the given row order, which makes the output deterministic.
    """
    A = as_matrix(A)
    m, n = A.shape
    if n == 2:
        return _extreme_rays_2d(A, atol)
    lineality = [np.eye(n)[i] for i in range(n)]
    rays: list[np.ndarray] = []
    # zero[j] is a bitmask over processed rows that ray j satisfies tightly
    zero: list[int] = []

    for k in range(m):
        a = _unit(A[k])
        if np.max(np.abs(a)) <= atol:
            # trivial row: tight on everything
            zero = [z | (1 << k) for z in zero]
            continue
        dots_lin = [float(a @ l) for l in lineality]
        if lineality and np.max(np.abs(dots_lin)) > atol:
            # The row cuts the lineality space: one lineality vector turns
            # into a ray, the rest are projected into the hyperplane.
            i0 = int(np.argmax(np.abs(dots_lin)))
            l0 = lineality[i0]
            d0 = dots_lin[i0]
            if d0 < 0:
                l0, d0 = -l0, -d0
            lineality = [
                _unit(l - (float(a @ l) / d0) * l0)
                for i, l in enumerate(lineality) if i != i0
            ]
            # projection along l0 keeps earlier tightness bits valid since
            # l0 was orthogonal to every processed row
            rays = [_unit(r - (float(a @ r) / d0) * l0) for r in rays]
            rays.append(_unit(l0))
            zero.append((1 << k) - 1)  # l0 was tight on every earlier row
        else:
            s = np.array([float(a @ r) for r in rays]) if rays else np.zeros(0)
            pos = [j for j in range(len(rays)) if s[j] > atol]
            zer = [j for j in range(len(rays)) if abs(s[j]) <= atol]
            neg = [j for j in range(len(rays)) if s[j] < -atol]
            if neg:
                new_rays = []
                new_zero = []
                for p in pos:
                    for q in neg:
                        common = zero[p] & zero[q]
                        adjacent = True
                        for j in range(len(rays)):
                            if j in (p, q):
                                continue
                            if zero[j] & common == common:
                                adjacent = False
                                break
                        if not adjacent:
                            continue
                        r_new = _unit(s[p] * rays[q] - s[q] * rays[p])
                        if np.max(np.abs(r_new)) <= atol:
                            continue
                        new_rays.append(r_new)
                        new_zero.append(common)
                keep = pos + zer
                rays = [rays[j] for j in keep] + new_rays
                zero = [zero[j] for j in keep] + new_zero
        # refresh tightness bit of row k for all survivors
        for j, r in enumerate(rays):
            if abs(float(a @ r)) <= atol:
                zero[j] |= 1 << k
    rays = _dedup(rays)
    return rays, lineality


# ---------------------------------------------------------------------------
# Polyhedron
# ---------------------------------------------------------------------------

@dataclass
class Polyhedron:
    """Convex polyhedral set carrying one or both representations.

    ``hrep`` is ``(B, b)`` for ``{x : B x >= b}``; ``vrep`` is
    ``(points, rays)``.  An empty polyhedron is a first-class value
    (``is_empty`` true, ``vrep`` absent) so pipelines can propagate
    infeasibility without exceptions.
    """

    dim: int
    B: np.ndarray | None = None
    b: np.ndarray | None = None
    points: list[np.ndarray] | None = None
    rays: list[np.ndarray] | None = None
    empty: bool = False
    canonical: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise GeometryError("dimension must be positive")
        if self.B is not None:
            self.B = as_matrix(self.B, cols=self.dim)
            self.b = as_vector(self.b, size=self.B.shape[0])
        if self.points is not None:
            self.points = [as_vector(p, self.dim) for p in self.points]
            self.rays = [as_vector(r, self.dim) for r in (self.rays or [])]
            if not self.points and not self.empty:
                raise GeometryError("nonempty V-representation needs a point")
            for r in self.rays:
                if np.max(np.abs(r)) <= ATOL:
                    raise GeometryError("zero ray in V-representation")
        if self.B is None and self.points is None and not self.empty:
            raise GeometryError("polyhedron needs at least one representation")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_hrep(B, b):
        B = as_matrix(B)
        return Polyhedron(dim=B.shape[1], B=B, b=as_vector(b))

    @staticmethod
    def from_vrep(points, rays=(), dim=None):
        pts = [as_vector(p) for p in points]
        rys = [as_vector(r) for r in rays]
        if dim is None:
            if not pts and not rys:
                raise GeometryError("cannot infer dimension of empty V-rep")
            dim = len(pts[0]) if pts else len(rys[0])
        return Polyhedron(dim=dim, points=pts, rays=rys)

    @staticmethod
    def make_empty(dim):
        return Polyhedron(dim=dim, empty=True)

    # -- predicates --------------------------------------------------------

    @property
    def is_empty(self):
        if self.empty:
            return True
        if self.points is not None:
            return False
        self._compute_vrep()
        return self.empty

    def has_hrep(self):
        return self.B is not None

    def has_vrep(self):
        return self.points is not None and not self.empty

    def contains(self, x, tol=1e-7):
        """H-rep membership test with scale-aware slack."""
        if self.empty:
            return False
        if self.B is None:
            self._compute_hrep()
        x = as_vector(x, self.dim)
        if self.B.shape[0] == 0:
            return True
        resid = self.B @ x - self.b
        scale = np.maximum(1.0, np.abs(self.b))
        return bool(np.all(resid >= -tol * scale))

    # -- conversions -------------------------------------------------------

    def _vrep_2d_fast(self):
        """Pairwise vertex enumeration for planar H-reps.

        Only trusted when it finds a vertex (a polyhedron with a vertex has
        no lines); ambiguous outcomes fall back to the lifted cone method.
        """
        B, b = self.B, self.b
        m = B.shape[0]
        if m < 2:
            return False
        scale = np.max(np.abs(B), axis=1)
        keep = scale > ATOL
        Bn, bn = B[keep] / scale[keep, None], b[keep] / scale[keep]
        if np.any(~keep) and np.any(b[~keep] > ATOL):
            self.empty = True
            return True
        m = Bn.shape[0]
        rays, lin = _extreme_rays_2d(Bn)
        if lin:
            return False
        ii, jj = np.triu_indices(m, k=1)
        det = Bn[ii, 0] * Bn[jj, 1] - Bn[ii, 1] * Bn[jj, 0]
        ok = np.abs(det) > 1e-12
        ii, jj, det = ii[ok], jj[ok], det[ok]
        if ii.size == 0:
            return False
        xs = np.column_stack([
            (bn[ii] * Bn[jj, 1] - bn[jj] * Bn[ii, 1]) / det,
            (Bn[ii, 0] * bn[jj] - Bn[jj, 0] * bn[ii]) / det,
        ])
        tol = 1e-9 * np.maximum(1.0, np.abs(bn))
        feas = np.all(Bn @ xs.T >= (bn - tol)[:, None], axis=0)
        verts = xs[feas]
        if verts.shape[0] == 0:
            return False
        self.points = _lexsorted(_dedup([v for v in verts]))
        self.rays = _lexsorted([np.asarray(r) for r in rays])
        return True

    def _compute_vrep(self):
        if self.points is not None or self.empty:
            return
        if self.dim == 2 and self._vrep_2d_fast():
            return
        B, b = self.B, self.b
        d = self.dim
        lift = np.zeros((B.shape[0] + 1, d + 1))
        lift[0, d] = 1.0  # homogenization t >= 0 first
        lift[1:, :d] = B
        lift[1:, d] = -b
        rays, lineality = extreme_rays(lift)
        pts, rec = [], []
        lines = []
        for l in lineality:
            if abs(l[d]) > ATOL:
                # lineality in t would mean the t >= 0 row was cut; the
                # homogenization row forbids it
                raise GeometryError("homogenization produced t-lineality")
            if np.max(np.abs(l[:d])) > ATOL:
                lines.append(_unit(l[:d]))
        for r in rays:
            if r[d] > ATOL:
                pts.append(r[:d] / r[d])
            elif np.max(np.abs(r[:d])) > ATOL:
                rec.append(_unit(r[:d]))
        if not pts:
            self.empty = True
            return
        # lines are stored as opposite ray pairs
        for l in lines:
            rec.extend([l, -l])
        self.points = _lexsorted(_dedup(pts))
        self.rays = _lexsorted(_dedup(rec))

    def _compute_hrep(self):
        if self.B is not None:
            return
        if self.empty:
            d = self.dim
            self.B = np.zeros((2, d))
            self.B[0, 0], self.B[1, 0] = 1.0, -1.0
            self.b = np.array([1.0, 1.0])  # x0 >= 1 and -x0 >= 1: infeasible
            return
        d = self.dim
        gens = [np.append(p, 1.0) for p in self.points]
        gens += [np.append(r, 0.0) for r in self.rays]
        rays, lineality = extreme_rays(np.array(gens))
        rows, rhs = [], []
        for kind in (rays, lineality):
            for v in kind:
                w, beta = v[:d], v[d]
                if np.max(np.abs(w)) <= ATOL:
                    continue
                rows.append(_unit(w))
                rhs.append(-beta / np.max(np.abs(w)))
                if kind is lineality:
                    rows.append(_unit(-w))
                    rhs.append(beta / np.max(np.abs(w)))
        if rows:
            order = sorted(range(len(rows)),
                           key=lambda i: tuple(np.round(np.append(rows[i], rhs[i]), 12)))
            self.B = np.array([rows[i] for i in order])
            self.b = np.array([rhs[i] for i in order])
        else:
            self.B = np.zeros((0, d))
            self.b = np.zeros(0)

    def hrep(self):
        """Return ``(B, b)``, computing it from the V-rep if needed."""
        self._compute_hrep()
        return self.B, self.b

    def vrep(self):
        """Return ``(points, rays)``; raises on an empty polyhedron."""
        self._compute_vrep()
        if self.empty:
            raise EmptyPolyhedronError("polyhedron is empty")
        return self.points, self.rays


def to_vrep(p: Polyhedron) -> Polyhedron:
    """Polyhedron with both representations, V-rep minimal."""
    q = canonicalize(p)
    if q.empty:
        raise EmptyPolyhedronError("polyhedron is empty")
    return q


def to_hrep(p: Polyhedron) -> Polyhedron:
    """Polyhedron with both representations, H-rep irredundant."""
    return canonicalize(p)


def canonicalize(p: Polyhedron) -> Polyhedron:
    """Minimal mutually-consistent H- and V-representations.

    Runs the double description both ways: the forward pass prunes
    non-vertex points and non-extreme rays, the dual pass prunes redundant
    inequalities.
    """
    if p.empty:
        return Polyhedron.make_empty(p.dim)
    if p.canonical and p.has_hrep() and p.has_vrep():
        return p
    if p.B is not None and p.points is None:
        work = Polyhedron(dim=p.dim, B=p.B, b=p.b)
        work._compute_vrep()
        if work.empty:
            return Polyhedron.make_empty(p.dim)
        out = Polyhedron(dim=p.dim, points=work.points, rays=work.rays)
        out._compute_hrep()
        out.canonical = True
        return out
    # V-rep given: dualize for the H-rep, then re-enumerate for minimal V
    work = Polyhedron(dim=p.dim, points=p.points, rays=p.rays)
    work._compute_hrep()
    out = Polyhedron(dim=p.dim, B=work.B, b=work.b)
    out._compute_vrep()
    if out.empty:
        raise GeometryError("V-represented polyhedron cannot be empty")
    out.canonical = True
    return out


# ---------------------------------------------------------------------------
# Cones
# ---------------------------------------------------------------------------

@dataclass
class Cone:
    """Polyhedral cone given by generating vectors (columns of a d x s matrix)."""

    generators: np.ndarray

    def __post_init__(self):
        g = as_matrix(self.generators)
        if g.shape[1]:
            norms = np.max(np.abs(g), axis=0)
            if np.any(norms <= ATOL):
                raise GeometryError("cone generators must be nonzero")
        self.generators = g

    @staticmethod
    def from_vectors(vectors, dim=None):
        vecs = [as_vector(v) for v in vectors]
        if not vecs:
            if dim is None:
                raise GeometryError("cannot infer dimension of trivial cone")
            return Cone(np.zeros((dim, 0)))
        return Cone(np.column_stack(vecs))

    @property
    def dim(self):
        return self.generators.shape[0]

    def vectors(self):
        return [self.generators[:, j] for j in range(self.generators.shape[1])]

    def hrep_rows(self):
        """Rows Z with ``cone = {x : Z x >= 0}`` (generators of the dual)."""
        return dual_cone(self).generators.T

    def contains(self, x, tol=1e-7):
        Z = self.hrep_rows()
        x = as_vector(x, self.dim)
        if Z.shape[0] == 0:
            # dual cone is {0}: the cone is all of R^d
            return True
        return bool(np.all(Z @ x >= -tol * max(1.0, float(np.max(np.abs(x))))))

    def lineality_dim(self):
        """Dimension of the lineality space (0 for pointed cones)."""
        Z = self.hrep_rows()
        if Z.shape[0] == 0:
            return self.dim
        return self.dim - np.linalg.matrix_rank(Z, tol=1e-9)

    def is_pointed(self):
        return self.lineality_dim() == 0


def dual_cone(c: Cone) -> Cone:
    """Positive dual cone ``{v : v.u >= 0 for all u in cone}``.

    The result carries a deduplicated, irredundant generator list; the
    dual of all of R^d is the trivial cone with no generators.
    """
    if c.dim < 1:
        raise GeometryError("dual_cone needs dimension >= 1")
    if c.generators.shape[1] == 0:
        # dual of {0} is R^d
        eye = np.eye(c.dim)
        return Cone(np.column_stack([eye, -eye]))
    rays, lineality = extreme_rays(c.generators.T)
    gens = [_unit(r) for r in rays]
    for l in lineality:
        gens.extend([_unit(l), _unit(-l)])
    gens = _lexsorted(_dedup(gens))
    if not gens:
        return Cone(np.zeros((c.dim, 0)))
    return Cone(np.column_stack(gens))


def minimal_generators(cone: Cone) -> Cone:
    """Drop generators that are conic combinations of the others.

    Keeps the surviving columns in their original order and scaling, which
    callers rely on for trade-volume weights.
    """
    cols = cone.vectors()
    if len(cols) <= 1:
        return cone
    from . import linprog  # local import: geometry stays importable alone

    keep = list(range(len(cols)))
    changed = True
    while changed:
        changed = False
        for idx in list(keep):
            others = [cols[j] for j in keep if j != idx]
            if not others:
                continue
            if _in_conic_hull(cols[idx], others, linprog):
                keep.remove(idx)
                changed = True
    return Cone(np.column_stack([cols[j] for j in keep]))


def _in_conic_hull(v, gens, linprog):
    G = np.column_stack(gens)
    prob = linprog.LpProblem(
        objective=np.zeros(G.shape[1]),
        eq=(G, v),
        bounds=[(0.0, None)] * G.shape[1],
    )
    return linprog.solve(prob).status == "optimal"


# ---------------------------------------------------------------------------
# Set operations
# ---------------------------------------------------------------------------

def intersect(ps) -> Polyhedron:
    """Intersection of polyhedra via concatenated, then reduced, H-reps.

    The result may be the empty polyhedron; when every input's recession
    cone contains the nonnegative orthant the intersection is guaranteed
    nonempty (componentwise maxima of selections are members).
    """
    ps = list(ps)
    if not ps:
        raise GeometryError("intersect needs at least one polyhedron")
    dim = ps[0].dim
    if any(p.dim != dim for p in ps):
        raise GeometryError("dimension mismatch in intersect")
    if any(p.is_empty for p in ps):
        return Polyhedron.make_empty(dim)
    blocks = [p.hrep() for p in ps]
    B = np.vstack([blk[0] for blk in blocks])
    b = np.concatenate([blk[1] for blk in blocks])
    return canonicalize(Polyhedron(dim=dim, B=B, b=b))


def add_cone(p: Polyhedron, c: Cone) -> Polyhedron:
    """Minkowski sum ``p + cone(c)``: same points, enlarged ray set."""
    if p.is_empty:
        raise EmptyPolyhedronError("add_cone needs a nonempty polyhedron")
    if p.dim != c.dim:
        raise GeometryError("dimension mismatch in add_cone")
    points, rays = p.vrep()
    all_rays = [np.asarray(r, float) for r in rays] + [_unit(g) for g in c.vectors()]
    return canonicalize(Polyhedron(dim=p.dim, points=list(points), rays=_dedup(all_rays)))


def convex_union(ps) -> Polyhedron:
    """Closed convex hull of a union of polyhedra (V-rep union, minimized)."""
    ps = list(ps)
    if not ps:
        raise GeometryError("convex_union needs at least one polyhedron")
    dim = ps[0].dim
    if any(p.dim != dim for p in ps):
        raise GeometryError("dimension mismatch in convex_union")
    points, rays = [], []
    for p in ps:
        pp, rr = p.vrep()
        points.extend(pp)
        rays.extend(rr)
    return canonicalize(Polyhedron(dim=dim, points=_dedup(points), rays=_dedup(rays)))
