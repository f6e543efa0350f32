"""Linear vector optimization by Benson's outer approximation.

The primal problem minimizes ``P x`` over ``{x : B x >= b}`` with respect
to a pointed, solid ordering cone ``C`` in R^q.  The geometric dual
maximizes ``D*(u, w) = (w_1, ..., w_{q-1}, b.u)`` over the dual-feasible
set w.r.t. the cone spanned by the last unit vector.  A solution pairs
finitely many efficient points/directions (a V-representation of the
upper image ``P[S] + C``) with finitely many dual points whose coupling
inequalities are an H-representation of it.

The solver runs the classic primal Benson loop: one bounding LP per
extreme row of the recession cone's dual, then vertex-separation LPs
that either certify an outer-approximation vertex or emit a cut from the
LP duals.  Cuts and certificates together yield both images in both
representations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linprog
from .geometry import (
    ATOL,
    Cone,
    Polyhedron,
    as_matrix,
    as_vector,
    dual_cone,
    extreme_rays,
    _dedup,
    _lexsorted,
    _unit,
)

CUT_TOL = 1e-8


class VopError(ValueError):
    pass


class VopInfeasibleError(VopError):
    pass


class VopUnboundedError(VopError):
    pass


@dataclass
class VopProblem:
    P: np.ndarray                 # (q, d) objective map
    B: np.ndarray                 # (m, d) feasible set {B x >= b}
    b: np.ndarray
    C: Cone                       # ordering cone in R^q, pointed, solid
    c: np.ndarray | None = None   # interior parameter with c_q = 1

    def __post_init__(self):
        self.P = as_matrix(self.P)
        self.B = as_matrix(self.B, cols=self.P.shape[1])
        self.b = as_vector(self.b, size=self.B.shape[0])
        if self.C.dim != self.P.shape[0]:
            raise VopError("ordering cone dimension must match objective rows")
        if self.c is not None:
            self.c = as_vector(self.c, size=self.P.shape[0])

    @property
    def q(self):
        return self.P.shape[0]

    @property
    def d(self):
        return self.P.shape[1]


@dataclass
class VopSolution:
    primal_points: list[np.ndarray]
    primal_directions: list[np.ndarray]
    dual_points: list[tuple[np.ndarray, np.ndarray]]   # (u, w) pairs
    upper_image: Polyhedron
    c: np.ndarray
    vertex_attainers: dict = field(default_factory=dict, repr=False)
    _problem: "VopProblem | None" = field(default=None, repr=False)
    _lower: Polyhedron | None = field(default=None, repr=False)

    @property
    def lower_image(self) -> Polyhedron:
        """Lower image of the geometric dual; built on first access."""
        if self._lower is None:
            self._lower = _lower_image(self._problem, self.c, self.dual_points,
                                       self.primal_points, self.primal_directions)
        return self._lower


def coupling_phi(y, ystar, c):
    """Bi-affine coupling whose nonnegativity characterizes both images."""
    y = as_vector(y)
    ystar = as_vector(ystar, size=y.size)
    c = as_vector(c, size=y.size)
    q = y.size
    head = float(y[:q - 1] @ ystar[:q - 1])
    return head + y[q - 1] * (1.0 - float(c[:q - 1] @ ystar[:q - 1])) - ystar[q - 1]


def coupling_phi_hat(y, ystar, c):
    return coupling_phi(y, ystar, c) + ystar[-1]


def _validate_cone_and_c(prob: VopProblem, dual_rows=None, assume_valid=False):
    q = prob.q
    if dual_rows is not None:
        Z = as_matrix(dual_rows, cols=q)
    else:
        Z = dual_cone(prob.C).generators.T  # rows: C = {y : Z y >= 0}
    if not assume_valid:
        # pointed iff the dual spans R^q; solid iff the generators do
        if Z.shape[0] == 0 or np.linalg.matrix_rank(Z, tol=1e-9) < q:
            raise VopError("ordering cone contains lines; liquidate first")
        if np.linalg.matrix_rank(prob.C.generators, tol=1e-9) < q:
            raise VopError("ordering cone has empty interior")
    c = prob.c
    if c is None:
        c = np.zeros(q)
        c[q - 1] = 1.0
        if np.any(Z @ c <= ATOL):
            # e_q is not interior for this cone: fall back to the mean of
            # the normalized generators, which always is
            gens = prob.C.generators
            c = np.mean(gens / np.max(np.abs(gens), axis=0, keepdims=True), axis=1)
    if abs(c[q - 1]) <= ATOL:
        raise VopError("parameter c must have positive last component")
    c = c / c[q - 1]
    margin = np.min(Z @ c / np.max(np.abs(Z), axis=1))
    if margin <= ATOL:
        raise VopError("parameter c is not strictly interior to the ordering cone")
    return c, Z


def _recession_rows(prob: VopProblem, Z):
    """H-representation rows of the upper image's recession cone."""
    x_rays, x_lines = extreme_rays(prob.B)
    gens = []
    for r in x_rays:
        img = prob.P @ r
        if np.max(np.abs(img)) > ATOL:
            gens.append(_unit(img))
    for l in x_lines:
        img = prob.P @ l
        if np.max(np.abs(img)) > ATOL:
            gens.extend([_unit(img), _unit(-img)])
    gens.extend(_unit(g) for g in prob.C.vectors())
    gens = _dedup(gens)
    rays, lin = extreme_rays(np.array(gens))
    if lin:
        raise VopError("degenerate recession dual")  # C is solid, cannot occur
    if not rays:
        raise VopUnboundedError("upper image is all of R^q")
    W = np.array(_lexsorted([_unit(r) for r in rays]))
    if np.linalg.matrix_rank(W, tol=1e-9) < prob.q:
        raise VopUnboundedError("upper image contains lines; no vertices exist")
    return W, x_rays, x_lines, gens


def _weighted_sum_lp(prob: VopProblem, w, feasible_point=None):
    res = linprog.solve(linprog.LpProblem(
        objective=prob.P.T @ w, ineq=(prob.B, prob.b)),
        feasible_point=feasible_point)
    if res.status == "infeasible":
        raise VopInfeasibleError("feasible set is empty")
    if res.status == "unbounded":
        raise VopUnboundedError("scalarization unbounded below")
    return res


def _separation_lp(prob: VopProblem, Z, c, y, feasible_point=None):
    """min t  s.t.  B x >= b,  P x <=_C y + t c.

    Nonpositive optimum certifies y in the upper image; otherwise the LP
    duals produce a supporting cut (u, w) with c.w = 1.
    """
    m, d = prob.B.shape
    k = Z.shape[0]
    A = np.zeros((m + k, d + 1))
    A[:m, :d] = prob.B
    A[m:, :d] = -Z @ prob.P
    A[m:, d] = Z @ c
    rhs = np.concatenate([prob.b, -(Z @ y)])
    obj = np.zeros(d + 1)
    obj[d] = 1.0
    start = None
    if feasible_point is not None:
        zc = Z @ c
        gap = Z @ (prob.P @ feasible_point - y)
        t0 = float(np.max(gap / zc)) if k else 0.0
        start = np.append(feasible_point, max(t0, 0.0) + 1.0)
    res = linprog.solve(linprog.LpProblem(objective=obj, ineq=(A, rhs)),
                        feasible_point=start)
    if res.status != "optimal":
        raise VopError(f"separation LP returned {res.status}")
    t = float(res.objective_value)
    x = res.x[:d]
    u = res.ineq_duals[:m]
    mu = res.ineq_duals[m:]
    w = Z.T @ mu
    return t, x, u, w


def benson_solve(prob: VopProblem, cut_tol: float = CUT_TOL,
                 dual_rows=None, assume_valid: bool = False,
                 feasible_point=None) -> VopSolution:
    """Solve (P) and its geometric dual, returning both images.

    ``dual_rows`` may supply a precomputed H-representation of the
    ordering cone; ``assume_valid`` skips the pointedness and solidity
    checks for callers that certify them.  Raises ``VopInfeasibleError``
    for an empty feasible set and ``VopUnboundedError`` when the upper
    image has no vertex (an unbounded scalarization, or a recession cone
    with lines).
    """
    c, Z = _validate_cone_and_c(prob, dual_rows=dual_rows, assume_valid=assume_valid)
    q = prob.q
    W, x_rays, x_lines, rec_gens = _recession_rows(prob, Z)

    rows = []
    rhs = []
    dual_points: list[tuple[np.ndarray, np.ndarray]] = []
    for w0 in W:
        w = w0 / float(c @ w0)
        res = _weighted_sum_lp(prob, w, feasible_point=feasible_point)
        if feasible_point is None:
            feasible_point = res.x
        beta = float(res.objective_value)
        rows.append(w)
        rhs.append(beta)
        dual_points.append((res.ineq_duals.copy(), w))

    verified: dict[tuple, np.ndarray] = {}
    vertices: list[np.ndarray] = []
    rays: list[np.ndarray] = []
    for _ in range(200 + 40 * q * max(len(prob.b), 1)):
        outer = Polyhedron(dim=q, B=np.array(rows), b=np.array(rhs))
        outer._compute_vrep()
        if outer.empty:
            raise VopError("outer approximation became empty")
        vertices, rays = outer.points, outer.rays
        progressed = False
        pending = [v for v in vertices
                   if tuple(np.round(v, 9)) not in verified]
        if not pending:
            break
        for y in pending:
            key = tuple(np.round(y, 9))
            t, x, u, w = _separation_lp(prob, Z, c, y, feasible_point=feasible_point)
            if t <= cut_tol:
                verified[key] = x
                progressed = True
                continue
            scale = max(1.0, float(np.max(np.abs(w))))
            duplicate = any(
                np.max(np.abs(w - wr)) <= 1e-9 * scale
                and abs(float(prob.b @ u) - br) <= 1e-7 * max(1.0, abs(br))
                for wr, br in zip(rows, rhs))
            if duplicate:
                # numerically stalled: accept the attainer found by the LP
                verified[key] = x
                progressed = True
                continue
            rows.append(w)
            rhs.append(float(prob.b @ u))
            dual_points.append((u, w))
            progressed = True
        if not progressed:
            raise VopError("Benson loop stalled")
    else:
        raise VopError("Benson loop exceeded iteration budget")

    # prune dual points to one per facet of the upper image
    facet_keep = _facet_filter(np.array(rows), np.array(rhs), vertices, rays, q)
    dual_points = [dual_points[i] for i in facet_keep]
    B_up = np.array([rows[i] for i in facet_keep])
    b_up = np.array([rhs[i] for i in facet_keep])

    upper = Polyhedron(dim=q, B=B_up, b=b_up,
                       points=list(vertices), rays=list(rays))
    upper.canonical = True

    attainers = {tuple(np.round(v, 9)): verified[tuple(np.round(v, 9))]
                 for v in vertices}
    primal_points = _dedup([verified[tuple(np.round(v, 9))] for v in vertices])
    primal_dirs = _primal_directions(prob, Z, x_rays, x_lines, rays)

    return VopSolution(
        primal_points=primal_points,
        primal_directions=primal_dirs,
        dual_points=dual_points,
        upper_image=upper,
        c=c,
        vertex_attainers=attainers,
        _problem=prob,
    )


def _facet_filter(rows, rhs, vertices, rays, q):
    """Indices of rows that support a facet, one representative per facet."""
    keep = []
    seen = []
    for i in range(rows.shape[0]):
        w, beta = rows[i], rhs[i]
        scale = max(1.0, float(np.max(np.abs(beta))))
        tight = [v for v in vertices if abs(float(w @ v) - beta) <= 1e-7 * scale]
        tight_rays = [r for r in rays if abs(float(w @ r)) <= 1e-7]
        if not tight:
            continue
        span = [v - tight[0] for v in tight[1:]] + tight_rays
        dim = np.linalg.matrix_rank(np.array(span), tol=1e-7) if span else 0
        if dim < q - 1:
            continue
        key = np.append(w / np.max(np.abs(w)), beta / np.max(np.abs(w)))
        if any(np.max(np.abs(key - s)) <= 1e-7 for s in seen):
            continue
        seen.append(key)
        keep.append(i)
    return keep


def _primal_directions(prob, Z, x_rays, x_lines, upper_rays):
    """Feasible directions whose images cover the non-C extreme rays."""
    candidates = []
    for r in x_rays:
        candidates.append((r, prob.P @ r))
    for l in x_lines:
        candidates.extend([(l, prob.P @ l), (-l, -(prob.P @ l))])
    dirs = []
    for ray in upper_rays:
        if np.all(Z @ ray >= -1e-7):
            continue  # already inside the ordering cone
        for x_dir, img in candidates:
            if np.max(np.abs(img)) <= ATOL:
                continue
            if np.max(np.abs(_unit(img) - _unit(np.asarray(ray)))) <= 1e-6:
                dirs.append(x_dir)
                break
        else:
            raise VopError("extreme direction without feasible preimage")
    return _dedup(dirs)


def _lower_image(prob, c, dual_points, primal_points, primal_dirs):
    """Lower image D*[T] - K in both representations.

    H-rep rows come from the coupling function: primal points via phi,
    primal directions and extreme directions of C via phi-hat.
    """
    q = prob.q
    pts = []
    for u, w in dual_points:
        pts.append(np.append(w[:q - 1], float(prob.b @ u)))
    rows, rhs = [], []
    for x in primal_points:
        y = prob.P @ x
        row = np.zeros(q)
        row[:q - 1] = y[:q - 1] - c[:q - 1] * y[q - 1]
        row[q - 1] = -1.0
        rows.append(row)
        rhs.append(-y[q - 1])
    hat_sources = [prob.P @ xh for xh in primal_dirs]
    hat_sources += list(prob.C.vectors())
    for yh in hat_sources:
        row = np.zeros(q)
        row[:q - 1] = yh[:q - 1] - c[:q - 1] * yh[q - 1]
        rows.append(row)
        rhs.append(-yh[q - 1])
    down = np.zeros(q)
    down[q - 1] = -1.0
    lower = Polyhedron(dim=q, points=_dedup(pts), rays=[down])
    lower._compute_hrep()
    built = Polyhedron(dim=q, B=np.array(rows), b=np.array(rhs))
    reduced = _reduce_against(built, lower)
    out = Polyhedron(dim=q, B=reduced[0], b=reduced[1],
                     points=lower.points, rays=lower.rays)
    out.canonical = True
    return out


def _reduce_against(raw: Polyhedron, canon: Polyhedron):
    """Keep one raw coupling row per facet of the canonical set."""
    Bc, bc = canon.B, canon.b
    cover: dict[int, int] = {}
    for i in range(raw.B.shape[0]):
        w = raw.B[i]
        scale = np.max(np.abs(w))
        if scale <= ATOL:
            continue
        wn, bn = w / scale, raw.b[i] / scale
        for j in range(Bc.shape[0]):
            if j in cover:
                continue
            if (np.max(np.abs(wn - Bc[j])) <= 1e-7
                    and abs(bn - bc[j]) <= 1e-7 * max(1.0, abs(bc[j]))):
                cover[j] = i
                break
    if len(cover) != Bc.shape[0]:
        raise VopError("coupling rows do not cover every facet of the lower image")
    idx = [cover[j] for j in range(Bc.shape[0])]
    return raw.B[idx], raw.b[idx]


# ---------------------------------------------------------------------------
# Geometric duality map
# ---------------------------------------------------------------------------

def psi_map(face_vertices, sol: VopSolution) -> Polyhedron:
    """Image of a K-maximal proper face of the lower image under the
    inclusion-reversing duality map.

    The face is given by its vertex set.  Rejects inputs that are not the
    vertex set of a K-maximal proper face.
    """
    q = sol.upper_image.dim
    given = [as_vector(v, q) for v in face_vertices]
    if not given:
        raise VopError("face must have at least one vertex")
    lo_pts, lo_rays = sol.lower_image.vrep()

    def match(v):
        for p in lo_pts:
            if np.max(np.abs(p - v)) <= 1e-7 * max(1.0, float(np.max(np.abs(p)))):
                return p
        return None

    matched = []
    for v in given:
        p = match(v)
        if p is None:
            raise VopError("input point is not a vertex of the lower image")
        matched.append(p)

    Bl, bl = sol.lower_image.hrep()
    tol = 1e-7
    common = [i for i in range(Bl.shape[0])
              if all(abs(float(Bl[i] @ p) - bl[i]) <= tol * max(1.0, abs(bl[i]))
                     for p in matched)]
    if not common:
        raise VopError("input is not contained in a proper face")
    face_pts = [p for p in lo_pts
                if all(abs(float(Bl[i] @ p) - bl[i]) <= tol * max(1.0, abs(bl[i]))
                       for i in common)]
    if len(face_pts) != len(matched):
        raise VopError("input is not the full vertex set of a face")
    down_in_face = all(abs(Bl[i][q - 1]) <= tol for i in common)
    if down_in_face:
        raise VopError("face is not K-maximal")

    up_pts, up_rays = sol.upper_image.vrep()
    sel_pts, sel_rays = [], []
    for y in up_pts:
        if all(_phi_zero(y, v, sol.c) for v in matched):
            sel_pts.append(y)
    for r in up_rays:
        if all(_phi_ray_zero(r, v, sol.c) for v in matched):
            sel_rays.append(r)
    if not sel_pts:
        raise VopError("duality image has no vertex; inconsistent solution")
    return Polyhedron(dim=q, points=sel_pts, rays=sel_rays)


def _w_of(v, c):
    q = v.size
    w = np.empty(q)
    w[:q - 1] = v[:q - 1]
    w[q - 1] = 1.0 - float(c[:q - 1] @ v[:q - 1])
    return w


def _phi_zero(y, v, c):
    w = _w_of(v, c)
    lhs = float(w @ y)
    return abs(lhs - v[-1]) <= 1e-7 * max(1.0, abs(v[-1]), abs(lhs))


def _phi_ray_zero(r, v, c):
    w = _w_of(v, c)
    return abs(float(w @ r)) <= 1e-7


def face_dim(poly_or_points) -> int:
    """Affine dimension of a face given as a Polyhedron or a point list."""
    if isinstance(poly_or_points, Polyhedron):
        pts, rays = poly_or_points.vrep()
    else:
        pts, rays = [as_vector(p) for p in poly_or_points], []
    if not pts:
        return -1
    span = [p - pts[0] for p in pts[1:]] + list(rays)
    if not span:
        return 0
    return int(np.linalg.matrix_rank(np.array(span), tol=1e-7))
