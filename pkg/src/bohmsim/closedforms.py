"""Closed-form Bohmian velocity fields, Jacobians and nodal points.

Two model families admit fully explicit guidance laws:

* system A (Psi_00 + c1 Psi_10 + c2 Psi_11): with
      W = Psi/Psi_00 = 1 + A x e^{-i w1 t} + B x y e^{-i(w1+w2)t},
      A = sqrt(2 w1) c1,  B = 2 sqrt(w1 w2) c2,
  the velocities are -Nx/G and -Ny/G with G = |W|^2 a polynomial in (x, y)
  and trigonometric functions of t.  The single nodal point follows from
  W = 0, a linear system in (A x, B x y).

* the entangled qubit pair: with u = f_x - f_y, th = g_x - g_y (f, g linear
  in x resp. y), the denominator is |c1 e^{u-i th} + c2 e^{-u+i th}|^2.
  All expressions here are evaluated in a rescaled form (multiplied through
  by e^{-2|u|}) so no intermediate can overflow, which matters once
  trajectories wander to |x| of a few tens.

Everything is generic over the scalar backend, so the same code serves the
hardware fast path's reference implementation and extended-precision runs.
All formulas assume hbar = 1 and unit masses, which both families use.
"""


def system_a_g(m, x, y, t):
    """Denominator G = |W|^2 (positive except exactly at the node)."""
    bk = m.bk
    w12 = m.w1 + m.w2
    c1t = bk.cos(m.w1 * t)
    c12 = bk.cos(w12 * t)
    c2t = bk.cos(m.w2 * t)
    ax = m.A * x
    bxy = m.B * x * y
    return (
        1
        + ax * ax
        + bxy * bxy
        + 2 * ax * c1t
        + 2 * bxy * c12
        + 2 * ax * bxy * c2t
    )


def system_a_velocity(m, x, y, t):
    """Closed-form (vx, vy) for system A."""
    bk = m.bk
    w12 = m.w1 + m.w2
    s1 = bk.sin(m.w1 * t)
    s12 = bk.sin(w12 * t)
    g = system_a_g(m, x, y, t)
    nx = m.A * s1 + m.B * y * s12
    ny = m.B * x * (m.A * x * bk.sin(m.w2 * t) + s12)
    return (-nx / g, -ny / g)


def system_a_jacobian(m, x, y, t):
    """Velocity and its spatial Jacobian, sharing subexpressions."""
    bk = m.bk
    w12 = m.w1 + m.w2
    s1 = bk.sin(m.w1 * t)
    s2 = bk.sin(m.w2 * t)
    s12 = bk.sin(w12 * t)
    c1t = bk.cos(m.w1 * t)
    c2t = bk.cos(m.w2 * t)
    c12 = bk.cos(w12 * t)
    A, B = m.A, m.B
    g = system_a_g(m, x, y, t)
    nx = A * s1 + B * y * s12
    ny = B * x * (A * x * s2 + s12)
    gx = 2 * A * A * x + 2 * B * B * x * y * y + 2 * A * c1t + 2 * B * y * c12 \
        + 4 * A * B * x * y * c2t
    gy = 2 * B * B * x * x * y + 2 * B * x * c12 + 2 * A * B * x * x * c2t
    # dNx/dx = 0, dNx/dy = B s12; dNy/dx = B(2Ax s2 + s12), dNy/dy = 0
    g2 = g * g
    j11 = nx * gx / g2
    j12 = (nx * gy - B * s12 * g) / g2
    j21 = (ny * gx - B * (2 * A * x * s2 + s12) * g) / g2
    j22 = ny * gy / g2
    return (-nx / g, -ny / g), [[j11, j12], [j21, j22]]


def system_a_node(m, t, tol=1e-12):
    """Nodal point (x_N, y_N); finite flag False when it runs to infinity.

    x_N = -sin((w1+w2)t) / (A sin(w2 t)),
    y_N = -A sin(w1 t) / (B sin((w1+w2)t));
    either denominator vanishing sends the node to infinity.
    """
    bk = m.bk
    w12 = m.w1 + m.w2
    s2 = bk.sin(m.w2 * t)
    s12 = bk.sin(w12 * t)
    if abs(s2) < tol or abs(s12) < tol:
        return None, None, False
    x_n = -s12 / (m.A * s2)
    y_n = -m.A * bk.sin(m.w1 * t) / (m.B * s12)
    return x_n, y_n, True


def system_a_node_velocity(m, t):
    """Analytic d/dt of the nodal position (finite-node times only)."""
    bk = m.bk
    w12 = m.w1 + m.w2
    s1 = bk.sin(m.w1 * t)
    c1t = bk.cos(m.w1 * t)
    s2 = bk.sin(m.w2 * t)
    c2t = bk.cos(m.w2 * t)
    s12 = bk.sin(w12 * t)
    c12 = bk.cos(w12 * t)
    vx = -(w12 * c12 * s2 - m.w2 * s12 * c2t) / (m.A * s2 * s2)
    vy = -m.A * (m.w1 * c1t * s12 - w12 * s1 * c12) / (m.B * s12 * s12)
    return vx, vy


def _qubit_core(m, x, y, t):
    """Shared pieces: F/G factors and the rescaled P, Q, R, denominator."""
    bk = m.bk
    cx = bk.cos(m.wx * t - m.sx)
    sx = bk.sin(m.wx * t - m.sx)
    cy = bk.cos(m.wy * t - m.sy)
    sy = bk.sin(m.wy * t - m.sy)
    fx_c = m.rx * cx  # dF/dx factors
    fx_s = m.rx * sx
    fy_c = m.ry * cy
    fy_s = m.ry * sy
    u = fx_c * x - fy_c * y
    th = fx_s * x - fy_s * y
    au = abs(u)
    p = m.c1 * m.c1 * bk.exp(2 * (u - au))
    q = m.c2 * m.c2 * bk.exp(-2 * (u + au))
    r = 2 * m.c1 * m.c2 * bk.exp(-2 * au)
    s2t = bk.sin(2 * th)
    c2t = bk.cos(2 * th)
    dn = p + q + r * c2t
    return fx_c, fx_s, fy_c, fy_s, p, q, r, s2t, c2t, dn


def qubit_velocity(m, x, y, t):
    """Closed-form (vx, vy) for the entangled qubit pair (rescaled form)."""
    fx_c, fx_s, fy_c, fy_s, p, q, r, s2t, c2t, dn = _qubit_core(m, x, y, t)
    vx = -(fx_s * (p - q) + fx_c * r * s2t) / dn
    vy = (fy_s * (p - q) + fy_c * r * s2t) / dn
    return vx, vy


def qubit_jacobian(m, x, y, t):
    """Velocity and spatial Jacobian for the qubit pair.

    Uses the exact identities (with N, M the vx/vy numerators and Dn the
    shared denominator; all rescale factors cancel in the ratios):
        dN/dx  =  2 Fx Gx Dn
        dN/dy  = -2 Fy Gx (P+Q) - 2 Fx Gy R cos(2 th)
        dM/dx  =  2 Fx Gy (P+Q) + 2 Fy Gx R cos(2 th)
        dM/dy  = -2 Fy Gy Dn
        dDn/dx =  2 Fx (P-Q) - 2 Gx R sin(2 th)
        dDn/dy = -2 Fy (P-Q) + 2 Gy R sin(2 th)
    """
    fx_c, fx_s, fy_c, fy_s, p, q, r, s2t, c2t, dn = _qubit_core(m, x, y, t)
    pmq = p - q
    ppq = p + q
    n_num = fx_s * pmq + fx_c * r * s2t
    m_num = fy_s * pmq + fy_c * r * s2t
    dn_dx = 2 * fx_c * pmq - 2 * fx_s * r * s2t
    dn_dy = -2 * fy_c * pmq + 2 * fy_s * r * s2t
    dn_sq = dn * dn
    dnx = 2 * fx_c * fx_s * dn
    dny = -2 * fy_c * fx_s * ppq - 2 * fx_c * fy_s * r * c2t
    dmx = 2 * fx_c * fy_s * ppq + 2 * fy_c * fx_s * r * c2t
    dmy = -2 * fy_c * fy_s * dn
    j11 = -(dnx * dn - n_num * dn_dx) / dn_sq
    j12 = -(dny * dn - n_num * dn_dy) / dn_sq
    j21 = (dmx * dn - m_num * dn_dx) / dn_sq
    j22 = (dmy * dn - m_num * dn_dy) / dn_sq
    vx = -n_num / dn
    vy = m_num / dn
    return (vx, vy), [[j11, j12], [j21, j22]]


def qubit_nodes(m, t, k_values, tol=1e-12):
    """Nodal points for the requested branch indices k.

    A node needs u = log|c2/c1| / 2 and th = k pi/2, with k odd when
    c1 c2 > 0 and even when c1 c2 < 0; (u, th) -> (x, y) is a 2x2 linear
    solve whose determinant vanishes (nodes at infinity) whenever
    sin((w_x - w_y) t - (s_x - s_y)) = 0, e.g. at t = 0.

    Returns (records, at_infinity): records are (k, x, y) triples.
    """
    bk = m.bk
    if m.c1 == 0 or m.c2 == 0:
        return [], False  # factorized state, no finite nodes
    cx = bk.cos(m.wx * t - m.sx)
    sx = bk.sin(m.wx * t - m.sx)
    cy = bk.cos(m.wy * t - m.sy)
    sy = bk.sin(m.wy * t - m.sy)
    fx_c = m.rx * cx
    fx_s = m.rx * sx
    fy_c = m.ry * cy
    fy_s = m.ry * sy
    det = -fx_c * fy_s + fy_c * fx_s  # = 2 a0^2 sqrt(wx wy) sin((wx-wy)t - ...)
    if abs(det) < tol * m.rx * m.ry:
        return [], True
    u_star = bk.log(abs(m.c2 / m.c1)) / 2
    want_odd = m.c1 * m.c2 > 0
    out = []
    for k in k_values:
        if (k % 2 != 0) != want_odd:
            continue
        th_star = k * bk.pi / 2
        x_n = (-u_star * fy_s + th_star * fy_c) / det
        y_n = (fx_c * th_star - fx_s * u_star) / det
        out.append((k, x_n, y_n))
    return out, False
