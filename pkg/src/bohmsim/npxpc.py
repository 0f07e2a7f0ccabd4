"""Nodal-point / X-point complexes and their diagnostics.

A moving nodal point (Psi = 0) drags with it a hyperbolic equilibrium of the
frame-relative flow, the X-point; together they form the complex that
generates chaos when trajectories pass close by.  This module locates nodes
(closed forms where available, Newton searches otherwise), classifies the
frozen-frame spiral around them, finds and classifies X-points, traces the
four asymptotic curves of the saddle, scans for the attractor/repellor
(Hopf) transition, continues nodal lines in 3-D, and detects close-approach
events along trajectories.

The frozen-frame field around a node N at time t is
    F(u, v) = v_Bohm(N + (u, v), t) - dN/dt,
evaluated at frozen t.  The field is singular at the origin (the node is a
vortex), so the spiral character is measured on a small ring instead: the
radial expansion rate averaged over 16 directions at radius eps, which by
the divergence theorem is a robust flux surrogate.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import closedforms as cf
from .errors import ContinuationError, NoSaddleError, SingularityError
from .wavefunctions import QubitModel, SystemAModel

NODE_RESIDUAL_TOL = 1e-10
RING_EPS = 1e-4
RING_DIRECTIONS = 16
DEGENERATE_RATE = 1e-6
XPOINT_SEED_RADII = (0.1, 0.3, 1.0)
XPOINT_FD_STEP = 1e-6
CURVE_SEED_OFFSET = 1e-6
NODE_CAPTURE_RADIUS = 1e-2


@dataclass
class NodalRecord:
    t: float
    position: tuple = None
    k: int = 0
    at_infinity: bool = False
    velocity: tuple = None
    eigenvalues: tuple = None
    label: str = None  # attractor / repellor / degenerate
    radial_rate: float = None


@dataclass
class XPointRecord:
    t: float
    offset: tuple
    position: tuple
    eigenvalues: tuple  # (lambda_plus, lambda_minus), real, opposite signs
    eigenvectors: tuple  # (unstable unit vector, stable unit vector)


@dataclass
class ApproachEvent:
    t_start: float
    t_end: float
    d_node_min: float
    d_xpoint_min: float = None
    chi_before: float = None
    chi_after: float = None


@dataclass
class CurveBranch:
    name: str  # unstable+ / unstable- / stable+ / stable-
    frame_points: np.ndarray  # (n, 2) offsets from the node
    lab_points: np.ndarray
    termination: str  # length / node / singular
    final_node_distance: float = None


@dataclass
class NodalLine:
    points: np.ndarray  # (n, 3)
    tangents: np.ndarray  # (n, 3) unit tangents
    frames: np.ndarray  # (n, 2, 3) orthonormal F-plane bases
    residuals: np.ndarray  # (n,) |Psi| at each point
    closed: bool = False


# ----------------------------------------------------------- node location

def _residual(model, q, t):
    return abs(model.psi(q, t))


def _newton_node_2d(model, q0, t, tol=1e-12, max_iter=50):
    """Newton on (Re Psi, Im Psi); returns the root or None."""
    x, y = float(q0[0]), float(q0[1])
    for _ in range(max_iter):
        psi, grad = model.dpsi((x, y), t)
        f = np.array([psi.real, psi.imag])
        jac = np.array(
            [[grad[0].real, grad[1].real], [grad[0].imag, grad[1].imag]]
        )
        try:
            step = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError:
            return None
        x, y = x - step[0], y - step[1]
        if not (math.isfinite(x) and math.isfinite(y)):
            return None
        if math.hypot(step[0], step[1]) < tol:
            return (x, y)
    return None


def nodal_points(model, t, k_max=9, box=(-8.0, 8.0, -8.0, 8.0), grid=41):
    """All nodal points of Psi(., t) as NodalRecords.

    The two closed-form families use their explicit node formulas (one branch
    for the three-term 2-D superposition; one branch per admissible k for the
    qubit pair, parity set by sign(c1 c2)).  Any other 2-D model is searched
    with Newton iterations seeded on a grid over `box`, deduplicated.
    """
    if isinstance(model, SystemAModel):
        x, y, ok = cf.system_a_node(model, t)
        if not ok:
            return [NodalRecord(t=t, k=0, at_infinity=True)]
        return [NodalRecord(t=t, position=(x, y), k=0)]
    if isinstance(model, QubitModel):
        want_odd = float(model.c1) * float(model.c2) > 0
        ks = [k for k in range(-k_max, k_max + 1) if (k % 2 != 0) == want_odd]
        roots, at_inf = cf.qubit_nodes(model, t, ks)
        if at_inf:
            return [NodalRecord(t=t, k=k, at_infinity=True) for k in ks]
        return [NodalRecord(t=t, position=(x, y), k=k) for k, x, y in roots]
    if model.dims != 2:
        raise ValueError("point search needs a 2-D model; 3-D nodes form lines")
    xs = np.linspace(box[0], box[1], grid)
    ys = np.linspace(box[2], box[3], grid)
    found = []
    for x0 in xs:
        for y0 in ys:
            root = _newton_node_2d(model, (x0, y0), t)
            if root is None:
                continue
            if _residual(model, root, t) > NODE_RESIDUAL_TOL:
                continue
            if any(
                math.hypot(root[0] - r.position[0], root[1] - r.position[1]) < 1e-8
                for r in found
            ):
                continue
            found.append(NodalRecord(t=t, position=root, k=len(found)))
    found.sort(key=lambda r: (r.position[0], r.position[1]))
    for i, r in enumerate(found):
        r.k = i
    return found


def _node_at(model, t, record, k_max=9):
    """Re-locate the node of `record`'s branch at a nearby time."""
    if isinstance(model, SystemAModel):
        x, y, ok = cf.system_a_node(model, t)
        if not ok:
            raise SingularityError(f"node at infinity at t={t}")
        return (x, y)
    if isinstance(model, QubitModel):
        roots, at_inf = cf.qubit_nodes(model, t, [record.k])
        if at_inf or not roots:
            raise SingularityError(f"node branch k={record.k} at infinity at t={t}")
        return roots[0][1], roots[0][2]
    root = _newton_node_2d(model, record.position, t)
    if root is None or _residual(model, root, t) > NODE_RESIDUAL_TOL:
        raise SingularityError(f"lost the node branch near t={t}")
    return root


def nodal_velocity(model, t, record, h=1e-5):
    """dN/dt by central differences of the node path (step h).

    The three-term 2-D superposition also has an analytic derivative
    (see closedforms.system_a_node_velocity); the two must agree closely,
    which the tests enforce.  The FD value is returned for all families so
    downstream consumers see one code path.
    """
    if record.at_infinity:
        raise SingularityError(f"node at infinity at t={t}")
    qp = _node_at(model, t + h, record)
    qm = _node_at(model, t - h, record)
    v = tuple((a - b) / (2 * h) for a, b in zip(qp, qm))
    record.velocity = v
    return v


# ------------------------------------------------------- frozen-frame flow

def frozen_frame_flow(model, t, record):
    """Field F(u, v) in the frame moving with the node, at frozen time t."""
    if record.at_infinity:
        raise SingularityError(f"node at infinity at t={t}")
    if record.velocity is None:
        nodal_velocity(model, t, record)
    vn = record.velocity
    nx, ny = record.position

    def flow(u, v):
        try:
            w = model.velocity((nx + u, ny + v), t)
        except ZeroDivisionError:
            raise SingularityError(
                f"velocity singular at offset ({u}, {v}) from the node"
            )
        return (w[0] - vn[0], w[1] - vn[1])

    return flow


def classify_nodal_point(model, t, record, eps=RING_EPS,
                         directions=RING_DIRECTIONS,
                         degenerate_tol=DEGENERATE_RATE):
    """Attractor / repellor / degenerate from the ring-averaged radial rate.

    Also fits a surrogate Jacobian J = (1/(n eps/2)) sum_j F_j u_j^T from the
    same ring samples and records its eigenvalue pair; tr(J)/2 equals the
    averaged radial rate by construction.
    """
    flow = frozen_frame_flow(model, t, record)
    jac = np.zeros((2, 2))
    rate = 0.0
    for j in range(directions):
        th = 2 * math.pi * j / directions
        ux, uy = math.cos(th), math.sin(th)
        fx, fy = flow(eps * ux, eps * uy)
        rate += (fx * ux + fy * uy) / eps
        jac += np.outer((fx, fy), (ux, uy))
    rate /= directions
    jac /= directions * eps / 2.0
    eig = np.linalg.eigvals(jac)
    eig = sorted(eig, key=lambda z: -z.real)
    record.eigenvalues = (complex(eig[0]), complex(eig[1]))
    record.radial_rate = rate
    if abs(rate) < degenerate_tol:
        record.label = "degenerate"
    elif rate < 0:
        record.label = "attractor"
    else:
        record.label = "repellor"
    return record.label, record.eigenvalues


def find_x_point(model, t, record, fd_step=XPOINT_FD_STEP,
                 radii=XPOINT_SEED_RADII, directions=RING_DIRECTIONS,
                 tol=1e-10, max_iter=60):
    """Newton search for the saddle of the frozen-frame field.

    Seeds on rings of 16 directions at each radius; a converged root
    qualifies only with real eigenvalues of opposite sign (det J < 0).
    """
    flow = frozen_frame_flow(model, t, record)

    def fd_jac(u, v):
        h = fd_step
        fxp = flow(u + h, v)
        fxm = flow(u - h, v)
        fyp = flow(u, v + h)
        fym = flow(u, v - h)
        return np.array(
            [
                [(fxp[0] - fxm[0]) / (2 * h), (fyp[0] - fym[0]) / (2 * h)],
                [(fxp[1] - fxm[1]) / (2 * h), (fyp[1] - fym[1]) / (2 * h)],
            ]
        )

    best = None
    for r in radii:
        for j in range(directions):
            th = 2 * math.pi * j / directions
            u, v = r * math.cos(th), r * math.sin(th)
            try:
                for _ in range(max_iter):
                    f = np.array(flow(u, v))
                    speed = math.hypot(f[0], f[1])
                    if speed < tol:
                        break
                    jac = fd_jac(u, v)
                    step = np.linalg.solve(jac, f)
                    u, v = u - step[0], v - step[1]
                    if not (math.isfinite(u) and math.isfinite(v)):
                        raise ValueError
                else:
                    continue
            except (SingularityError, np.linalg.LinAlgError, ValueError,
                    ZeroDivisionError, OverflowError):
                continue
            jac = fd_jac(u, v)
            if np.linalg.det(jac) >= 0:
                continue
            w, vecs = np.linalg.eig(jac)
            if abs(w[0].imag) > 1e-9 * abs(w[0].real):
                continue
            w = w.real
            order = np.argsort(-w)
            lam_p, lam_m = w[order[0]], w[order[1]]
            if not (lam_p > 0 > lam_m):
                continue
            e_u = vecs[:, order[0]].real
            e_s = vecs[:, order[1]].real
            e_u = e_u / np.linalg.norm(e_u)
            e_s = e_s / np.linalg.norm(e_s)
            cand = XPointRecord(
                t=t,
                offset=(u, v),
                position=(record.position[0] + u, record.position[1] + v),
                eigenvalues=(float(lam_p), float(lam_m)),
                eigenvectors=(tuple(e_u), tuple(e_s)),
            )
            d = math.hypot(u, v)
            if best is None or d < best[0]:
                best = (d, cand)
    if best is None:
        raise NoSaddleError(f"no saddle of the frozen-frame field at t={t}")
    return best[1]


def hopf_scan(model, t_start, t_end, step=0.05, branch=None, refine_tol=1e-6):
    """Times where the node flips attractor <-> repellor (radial rate zero).

    Coarse scan of the ring-averaged rate, then bisection on each bracketing
    interval.  Samples where the node is at infinity (or the rate cannot be
    evaluated) break the continuity and are skipped.
    """

    def rate_at(t):
        try:
            records = nodal_points(model, t)
            recs = [r for r in records if not r.at_infinity]
            if not recs:
                return None
            rec = recs[0] if branch is None else next(
                (r for r in recs if r.k == branch), None
            )
            if rec is None:
                return None
            classify_nodal_point(model, t, rec)
            return rec.radial_rate
        except (SingularityError, ZeroDivisionError, OverflowError):
            return None

    ts = np.arange(t_start, t_end + 0.5 * step, step)
    rates = [rate_at(float(t)) for t in ts]
    events = []
    for i in range(len(ts) - 1):
        r0, r1 = rates[i], rates[i + 1]
        if r0 is None or r1 is None or r0 == 0.0 or r0 * r1 > 0:
            continue
        a, b = float(ts[i]), float(ts[i + 1])
        ra = r0
        while b - a > refine_tol:
            mid = 0.5 * (a + b)
            rm = rate_at(mid)
            if rm is None:
                break
            if rm == 0.0 or ra * rm < 0:
                b = mid
            else:
                a, ra = mid, rm
        events.append(0.5 * (a + b))
    return events


# --------------------------------------------------------- asymptotic curves

def trace_asymptotic_curves(model, t, record, xrec, arc_length=3.0,
                            step=1e-3, delta=CURVE_SEED_OFFSET,
                            capture_radius=NODE_CAPTURE_RADIUS):
    """The four invariant branches of the X-point saddle at frozen t.

    Unstable branches follow F at unit speed from X +/- delta e_u; stable
    branches follow -F from X +/- delta e_s.  A branch terminates on its arc
    budget, on entering the capture radius around the node (the spiral
    branch), or on a singular evaluation.
    """
    flow = frozen_frame_flow(model, t, record)
    e_u, e_s = (np.array(v) for v in xrec.eigenvectors)
    x0 = np.array(xrec.offset)
    branches = [
        ("unstable+", x0 + delta * e_u, 1.0),
        ("unstable-", x0 - delta * e_u, 1.0),
        ("stable+", x0 + delta * e_s, -1.0),
        ("stable-", x0 - delta * e_s, -1.0),
    ]
    out = []
    node = np.array(record.position)
    for name, start, sign in branches:
        pts = [start.copy()]
        termination = "length"

        def rhs(p):
            f = np.array(flow(p[0], p[1]))
            n = np.linalg.norm(f)
            if n == 0:
                raise SingularityError("stagnation point on the curve")
            return sign * f / n

        p = start.copy()
        s = 0.0
        while s < arc_length:
            try:
                k1 = rhs(p)
                k2 = rhs(p + 0.5 * step * k1)
                k3 = rhs(p + 0.5 * step * k2)
                k4 = rhs(p + step * k3)
            except (SingularityError, ZeroDivisionError, OverflowError):
                termination = "singular"
                break
            p = p + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            s += step
            pts.append(p.copy())
            if np.linalg.norm(p) < capture_radius:
                termination = "node"
                break
        frame = np.array(pts)
        out.append(
            CurveBranch(
                name=name,
                frame_points=frame,
                lab_points=frame + node,
                termination=termination,
                final_node_distance=float(np.linalg.norm(frame[-1])),
            )
        )
    return out


# ------------------------------------------------------------ 3-D nodal line

def _line_residual_jac(model, q, t):
    psi, grad = model.dpsi(q, t)
    f = np.array([psi.real, psi.imag])
    jac = np.array(
        [
            [grad[0].real, grad[1].real, grad[2].real],
            [grad[0].imag, grad[1].imag, grad[2].imag],
        ]
    )
    return f, jac


def _line_correct(model, q, t, tol=1e-12, max_iter=30):
    """Minimal-norm Newton onto the nodal line; returns corrected point."""
    q = np.array(q, dtype=float)
    for _ in range(max_iter):
        f, jac = _line_residual_jac(model, q, t)
        if np.max(np.abs(f)) < tol:
            return q
        try:
            delta = jac.T @ np.linalg.solve(jac @ jac.T, f)
        except np.linalg.LinAlgError:
            raise ContinuationError(f"degenerate line Jacobian near {tuple(q)}")
        q = q - delta
        if not np.all(np.isfinite(q)):
            raise ContinuationError("corrector diverged")
    f, _ = _line_residual_jac(model, q, t)
    if np.max(np.abs(f)) < 1e-9:
        return q
    raise ContinuationError(f"corrector failed to converge near {tuple(q)}")


def _line_frame(model, q, t, prev_tangent=None):
    """(unit tangent, F-plane basis (e1, e2)) at a line point."""
    _, jac = _line_residual_jac(model, q, t)
    tangent = np.cross(jac[0], jac[1])
    n = np.linalg.norm(tangent)
    if n == 0:
        raise ContinuationError(f"tangent undefined at {tuple(q)}")
    tangent = tangent / n
    if prev_tangent is not None and np.dot(tangent, prev_tangent) < 0:
        tangent = -tangent
    ref = np.array([1.0, 0.0, 0.0])
    if abs(np.dot(ref, tangent)) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    e1 = ref - np.dot(ref, tangent) * tangent
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(tangent, e1)
    return tangent, (e1, e2)


def trace_nodal_line_3d(model, t, seed, arc_length=6.0, step=0.01):
    """Predictor-corrector continuation of the nodal line Re=Im=0 at frozen t.

    Returns a NodalLine with per-point tangents and F-plane bases (the plane
    orthogonal to the line in which the local spiral/X-point structure
    lives).  Detects closure when the line returns to its start.
    """
    if model.dims != 3:
        raise ValueError("nodal-line continuation needs a 3-D model")
    q = _line_correct(model, seed, t)
    tangent, frame = _line_frame(model, q, t)
    points = [q.copy()]
    tangents = [tangent.copy()]
    frames = [np.array(frame)]
    residuals = [_residual(model, q, t)]
    closed = False
    s = 0.0
    while s < arc_length:
        pred = q + step * tangent
        q_new = _line_correct(model, pred, t)
        tangent, frame = _line_frame(model, q_new, t, prev_tangent=tangent)
        q = q_new
        s += step
        points.append(q.copy())
        tangents.append(tangent.copy())
        frames.append(np.array(frame))
        residuals.append(_residual(model, q, t))
        # arc spacing is ~step, so a returning loop passes within step/2
        if s > 3 * step and np.linalg.norm(q - points[0]) < step / 2:
            closed = True
            break
    return NodalLine(
        points=np.array(points),
        tangents=np.array(tangents),
        frames=np.array(frames),
        residuals=np.array(residuals),
        closed=closed,
    )


# ----------------------------------------------------------- approach events

def _node_distance(model, q, t, k_max=9):
    """Distance from q to the nearest finite nodal point at time t."""
    try:
        records = nodal_points(model, t, k_max=k_max)
    except (SingularityError, ZeroDivisionError, OverflowError):
        return math.inf, None
    best = math.inf
    best_rec = None
    for r in records:
        if r.at_infinity:
            continue
        d = math.hypot(q[0] - r.position[0], q[1] - r.position[1])
        if d < best:
            best, best_rec = d, r
    return best, best_rec


def approach_events(path, model, threshold=0.5, k_max=9,
                    with_xpoints=True):
    """Maximal intervals where the trajectory is within `threshold` of a node.

    Each event records the minimum node distance, the minimum distance to
    that node's X-point over the interval (when one can be found), and the
    LCN value just before and just after the interval (when the path carries
    a chi series).
    """
    times = np.asarray([float(x) for x in path.times])
    pts = np.asarray([[float(v) for v in p] for p in path.points])
    chi = None if path.chi is None else np.asarray([float(c) for c in path.chi])
    events = []
    inside = False
    start_i = 0
    d_min = math.inf
    x_min = math.inf
    rec_at_min = None

    def close_event(end_i):
        d_x = None
        if with_xpoints and rec_at_min is not None:
            tm = times[(start_i + end_i) // 2]
            try:
                recs = nodal_points(model, float(tm), k_max=k_max)
                recs = [r for r in recs if not r.at_infinity]
                rec = min(
                    recs,
                    key=lambda r: math.hypot(
                        r.position[0] - rec_at_min.position[0],
                        r.position[1] - rec_at_min.position[1],
                    ),
                ) if recs else None
                if rec is not None:
                    xr = find_x_point(model, float(tm), rec)
                    mid = pts[(start_i + end_i) // 2]
                    d_x = float(
                        math.hypot(mid[0] - xr.position[0], mid[1] - xr.position[1])
                    )
            except (NoSaddleError, SingularityError, ZeroDivisionError):
                d_x = None
        events.append(
            ApproachEvent(
                t_start=float(times[start_i]),
                t_end=float(times[end_i]),
                d_node_min=float(d_min),
                d_xpoint_min=d_x,
                chi_before=(
                    float(chi[max(start_i - 1, 0)]) if chi is not None else None
                ),
                chi_after=(
                    float(chi[min(end_i + 1, len(times) - 1)])
                    if chi is not None
                    else None
                ),
            )
        )

    for i, (t, q) in enumerate(zip(times, pts)):
        d, rec = _node_distance(model, q, float(t), k_max=k_max)
        if d < threshold:
            if not inside:
                inside = True
                start_i = i
                d_min = d
                rec_at_min = rec
            elif d < d_min:
                d_min = d
                rec_at_min = rec
        elif inside:
            close_event(i - 1)
            inside = False
            d_min = math.inf
            rec_at_min = None
    if inside:
        close_event(len(times) - 1)
    return events
