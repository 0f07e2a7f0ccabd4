# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Hot integrator kernels.

C implementations of the per-step velocity / Jacobian / density evaluations
and of the full adaptive Dormand-Prince 5(4) loop for the model families the
package ships (the 2-D three-term superposition, the entangled qubit pair,
generic eigenstate superpositions up to 3-D, and the driven classical
oscillator).  The control flow mirrors the pure-Python integrator in
`dynamics` branch for branch: same tableau, same error norm over the
position block only, same near-node rejection rule, same renormalization
bookkeeping.  The pure path remains the reference; agreement is enforced by
tests.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport (INFINITY, M_PI, cos, exp, fabs, fmax, fmin, isfinite,
                        log, pow, sin, sqrt)

from .errors import SingularityError, StepLimitError

cnp.import_array()

DEF MAX_DIM = 3
DEF MAX_TERMS = 8
DEF MAX_N = 60

ctypedef double complex dcplx

cdef struct Params:
    int kind            # 1 systemA, 2 qubit, 3 superposition, 4 classical
    int dim
    int has_density
    double floor        # singularity floor on |Psi|^2
    double norm_sq
    double f[12]        # family scalars
    # superposition data
    int nterms
    int modes[MAX_TERMS][MAX_DIM]
    int nmax[MAX_DIM]
    double hbar
    double masses[MAX_DIM]
    double alphas[MAX_DIM]
    double energies[MAX_TERMS]
    double cre[MAX_TERMS]
    double cim[MAX_TERMS]


# ---------------------------------------------------------------- system A

cdef inline double sysa_g(Params* p, double x, double y, double t) noexcept nogil:
    cdef double A = p.f[0], B = p.f[1], w1 = p.f[2], w2 = p.f[3]
    cdef double ax = A * x, bxy = B * x * y
    return (1.0 + ax * ax + bxy * bxy + 2.0 * ax * cos(w1 * t)
            + 2.0 * bxy * cos((w1 + w2) * t) + 2.0 * ax * bxy * cos(w2 * t))


cdef int sysa_rhs(Params* p, double* q, double t, double* v, double* jac,
                  int want_jac) noexcept nogil:
    cdef double A = p.f[0], B = p.f[1], w1 = p.f[2], w2 = p.f[3]
    cdef double x = q[0], y = q[1]
    cdef double w12 = w1 + w2
    cdef double s1 = sin(w1 * t), s2 = sin(w2 * t), s12 = sin(w12 * t)
    cdef double c1t = cos(w1 * t), c2t = cos(w2 * t), c12 = cos(w12 * t)
    cdef double g = sysa_g(p, x, y, t)
    if g == 0.0:
        return 1
    cdef double nx = A * s1 + B * y * s12
    cdef double ny = B * x * (A * x * s2 + s12)
    v[0] = -nx / g
    v[1] = -ny / g
    cdef double gx, gy, g2
    if want_jac:
        gx = (2.0 * A * A * x + 2.0 * B * B * x * y * y + 2.0 * A * c1t
              + 2.0 * B * y * c12 + 4.0 * A * B * x * y * c2t)
        gy = 2.0 * B * B * x * x * y + 2.0 * B * x * c12 + 2.0 * A * B * x * x * c2t
        g2 = g * g
        jac[0] = nx * gx / g2
        jac[1] = (nx * gy - B * s12 * g) / g2
        jac[2] = (ny * gx - B * (2.0 * A * x * s2 + s12) * g) / g2
        jac[3] = ny * gy / g2
    return 0


cdef double sysa_logdens(Params* p, double* q, double t) noexcept nogil:
    cdef double w1 = p.f[2], w2 = p.f[3]
    cdef double g = sysa_g(p, q[0], q[1], t)
    if g <= 0.0:
        return -INFINITY
    return (log(sqrt(w1 * w2) / M_PI) - w1 * q[0] * q[0] - w2 * q[1] * q[1]
            + log(g) - log(p.norm_sq))


# ------------------------------------------------------------------- qubit

cdef int qubit_rhs(Params* p, double* q, double t, double* v, double* jac,
                   int want_jac) noexcept nogil:
    cdef double c1 = p.f[0], c2 = p.f[1], rx = p.f[2], ry = p.f[3]
    cdef double wx = p.f[4], wy = p.f[5], sx = p.f[6], sy = p.f[7]
    cdef double x = q[0], y = q[1]
    cdef double cx = cos(wx * t - sx), sxv = sin(wx * t - sx)
    cdef double cy = cos(wy * t - sy), syv = sin(wy * t - sy)
    cdef double fx_c = rx * cx, fx_s = rx * sxv
    cdef double fy_c = ry * cy, fy_s = ry * syv
    cdef double u = fx_c * x - fy_c * y
    cdef double th = fx_s * x - fy_s * y
    cdef double au = fabs(u)
    cdef double pt = c1 * c1 * exp(2.0 * (u - au))
    cdef double qt = c2 * c2 * exp(-2.0 * (u + au))
    cdef double rt = 2.0 * c1 * c2 * exp(-2.0 * au)
    cdef double s2t = sin(2.0 * th), c2t = cos(2.0 * th)
    cdef double dn = pt + qt + rt * c2t
    if dn == 0.0:
        return 1
    cdef double pmq = pt - qt, ppq = pt + qt
    cdef double n_num = fx_s * pmq + fx_c * rt * s2t
    cdef double m_num = fy_s * pmq + fy_c * rt * s2t
    v[0] = -n_num / dn
    v[1] = m_num / dn
    cdef double dn_dx, dn_dy, dn_sq, dnx, dny, dmx, dmy
    if want_jac:
        dn_dx = 2.0 * fx_c * pmq - 2.0 * fx_s * rt * s2t
        dn_dy = -2.0 * fy_c * pmq + 2.0 * fy_s * rt * s2t
        dn_sq = dn * dn
        dnx = 2.0 * fx_c * fx_s * dn
        dny = -2.0 * fy_c * fx_s * ppq - 2.0 * fx_c * fy_s * rt * c2t
        dmx = 2.0 * fx_c * fy_s * ppq + 2.0 * fy_c * fx_s * rt * c2t
        dmy = -2.0 * fy_c * fy_s * dn
        jac[0] = -(dnx * dn - n_num * dn_dx) / dn_sq
        jac[1] = -(dny * dn - n_num * dn_dy) / dn_sq
        jac[2] = (dmx * dn - m_num * dn_dx) / dn_sq
        jac[3] = (dmy * dn - m_num * dn_dy) / dn_sq
    return 0


cdef double qubit_logdens(Params* p, double* q, double t) noexcept nogil:
    cdef double c1 = p.f[0], c2 = p.f[1], rx = p.f[2], ry = p.f[3]
    cdef double wx = p.f[4], wy = p.f[5], sx = p.f[6], sy = p.f[7]
    cdef double a0 = p.f[8]
    cdef double x = q[0], y = q[1]
    cdef double cx = cos(wx * t - sx), sxv = sin(wx * t - sx)
    cdef double cy = cos(wy * t - sy), syv = sin(wy * t - sy)
    cdef double u = rx * x * cx - ry * y * cy
    cdef double th = rx * x * sxv - ry * y * syv
    cdef double au = fabs(u)
    cdef double dn = (c1 * c1 * exp(2.0 * (u - au)) + c2 * c2 * exp(-2.0 * (u + au))
                      + 2.0 * c1 * c2 * exp(-2.0 * au) * cos(2.0 * th))
    if dn <= 0.0:
        return -INFINITY
    return (log(sqrt(wx * wy) / M_PI) - log(p.norm_sq)
            - wx * x * x - wy * y * y
            - 2.0 * a0 * a0 * (cx * cx + cy * cy)
            + 2.0 * au + log(dn))


# ----------------------------------------------------- generic superposition

cdef int super_eval(Params* p, double* q, double t, dcplx* psi, dcplx* grad,
                    dcplx* hess, int order) noexcept nogil:
    """psi / grad / Hessian via per-axis Hermite ladders (see pure version)."""
    cdef double val[MAX_DIM][MAX_N + 1]
    cdef double der[MAX_DIM][MAX_N + 1]
    cdef double d2v[MAX_DIM][MAX_N + 1]
    cdef double hl[MAX_N + 1]
    cdef int j, k, l, n, kk
    cdef double a, sa, u, gauss, hm1
    for j in range(p.dim):
        a = p.alphas[j]
        sa = sqrt(a)
        u = sa * q[j]
        gauss = exp(-u * u / 2.0)
        hl[0] = 1.0
        if p.nmax[j] >= 1:
            hl[1] = 2.0 * u
        for n in range(1, p.nmax[j]):
            hl[n + 1] = 2.0 * u * hl[n] - 2.0 * n * hl[n - 1]
        for n in range(p.nmax[j] + 1):
            val[j][n] = hl[n] * gauss
            hm1 = hl[n - 1] if n >= 1 else 0.0
            der[j][n] = sa * gauss * (2.0 * n * hm1 - u * hl[n])
            if order >= 2:
                d2v[j][n] = a * (u * u - (2.0 * n + 1.0)) * val[j][n]
    psi[0] = 0
    for j in range(p.dim):
        grad[j] = 0
        if order >= 2:
            for l in range(p.dim):
                hess[j * p.dim + l] = 0
    cdef dcplx camp, term, rest
    cdef double et, ph_re, ph_im
    for k in range(p.nterms):
        et = p.energies[k] * t
        ph_re = cos(et)
        ph_im = -sin(et)
        camp = (p.cre[k] * ph_re - p.cim[k] * ph_im) + \
               1j * (p.cre[k] * ph_im + p.cim[k] * ph_re)
        term = camp
        for j in range(p.dim):
            term = term * val[j][p.modes[k][j]]
        psi[0] = psi[0] + term
        if order >= 1:
            for j in range(p.dim):
                rest = camp
                for l in range(p.dim):
                    if l == j:
                        rest = rest * der[l][p.modes[k][l]]
                    else:
                        rest = rest * val[l][p.modes[k][l]]
                grad[j] = grad[j] + rest
        if order >= 2:
            for j in range(p.dim):
                for l in range(j, p.dim):
                    rest = camp
                    for kk in range(p.dim):
                        if kk == j and kk == l:
                            rest = rest * d2v[kk][p.modes[k][kk]]
                        elif kk == j or kk == l:
                            rest = rest * der[kk][p.modes[k][kk]]
                        else:
                            rest = rest * val[kk][p.modes[k][kk]]
                    hess[j * p.dim + l] = hess[j * p.dim + l] + rest
    if order >= 2:
        for j in range(p.dim):
            for l in range(j):
                hess[j * p.dim + l] = hess[l * p.dim + j]
    return 0


cdef int super_rhs(Params* p, double* q, double t, double* v, double* jac,
                   int want_jac) noexcept nogil:
    cdef dcplx psi, grad[MAX_DIM], hess[MAX_DIM * MAX_DIM]
    cdef dcplx inv, gj
    cdef int j, l
    super_eval(p, q, t, &psi, grad, hess, 2 if want_jac else 1)
    cdef double m2 = (psi.real * psi.real + psi.imag * psi.imag) / p.norm_sq
    if m2 < p.floor:
        return 1
    inv = 1.0 / psi
    for j in range(p.dim):
        v[j] = p.hbar / p.masses[j] * (grad[j] * inv).imag
    if want_jac:
        for j in range(p.dim):
            gj = grad[j] * inv
            for l in range(p.dim):
                jac[j * p.dim + l] = (p.hbar / p.masses[j]
                                      * (hess[j * p.dim + l] * inv
                                         - gj * (grad[l] * inv)).imag)
    return 0


cdef double super_logdens(Params* p, double* q, double t) noexcept nogil:
    cdef dcplx psi
    cdef dcplx dummy_g[MAX_DIM]
    cdef dcplx dummy_h[MAX_DIM * MAX_DIM]
    super_eval(p, q, t, &psi, dummy_g, dummy_h, 0)
    cdef double m2 = (psi.real * psi.real + psi.imag * psi.imag) / p.norm_sq
    if m2 <= 0.0:
        return -INFINITY
    return log(m2)


# --------------------------------------------------------------- classical

cdef int classical_rhs(Params* p, double* q, double t, double* v, double* jac,
                       int want_jac) noexcept nogil:
    cdef double eps = p.f[0], omega = p.f[1], sg = p.f[2]
    cdef double x = q[0]
    cdef double s2 = sg * sg
    cdef double env = exp(-x * x / (2.0 * s2)) * eps * cos(omega * t)
    v[0] = q[1]
    v[1] = -x - env * (x * x * x - x * x * x * x * x / (4.0 * s2))
    cdef double x2
    if want_jac:
        x2 = x * x
        jac[0] = 0.0
        jac[1] = 1.0
        jac[2] = -1.0 - env * (3.0 * x2 - 2.25 * x2 * x2 / s2
                               + x2 * x2 * x2 / (4.0 * s2 * s2))
        jac[3] = 0.0
    return 0


# ------------------------------------------------------------------ driver

cdef int eval_rhs(Params* p, double* q, double t, double* v, double* jac,
                  int want_jac) noexcept nogil:
    if p.kind == 1:
        return sysa_rhs(p, q, t, v, jac, want_jac)
    elif p.kind == 2:
        return qubit_rhs(p, q, t, v, jac, want_jac)
    elif p.kind == 3:
        return super_rhs(p, q, t, v, jac, want_jac)
    else:
        return classical_rhs(p, q, t, v, jac, want_jac)


cdef double eval_logdens(Params* p, double* q, double t) noexcept nogil:
    if p.kind == 1:
        return sysa_logdens(p, q, t)
    elif p.kind == 2:
        return qubit_logdens(p, q, t)
    else:
        return super_logdens(p, q, t)


# Dormand-Prince coefficients (same rationals as the pure path)
cdef double DA[6][6]
cdef double DC[7]
cdef double DE[7]
DA[0][:] = [1.0 / 5.0, 0, 0, 0, 0, 0]
DA[1][:] = [3.0 / 40.0, 9.0 / 40.0, 0, 0, 0, 0]
DA[2][:] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0, 0, 0]
DA[3][:] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0,
            -212.0 / 729.0, 0, 0]
DA[4][:] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
            -5103.0 / 18656.0, 0]
DA[5][:] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0,
            -2187.0 / 6784.0, 11.0 / 84.0]
DC[:] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0]
DE[:] = [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
         -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0]


cdef int build_params(int kind, double[:] fpar, int[:] ipar, double floor,
                      int has_density, Params* p) except -1:
    cdef int dim, nt, j, k, off
    p.kind = kind
    p.floor = floor
    p.has_density = has_density
    if kind == 1:
        p.dim = 2
        for j in range(4):
            p.f[j] = fpar[j]
        p.norm_sq = fpar[4]
    elif kind == 2:
        p.dim = 2
        for j in range(9):
            p.f[j] = fpar[j]
        p.norm_sq = fpar[9]
    elif kind == 3:
        dim = ipar[0]
        nt = ipar[1]
        if dim > MAX_DIM or nt > MAX_TERMS:
            raise ValueError("superposition too large for compiled kernels")
        p.dim = dim
        p.nterms = nt
        p.hbar = fpar[0]
        p.norm_sq = fpar[1]
        off = 2
        for j in range(dim):
            p.masses[j] = fpar[off + j]
        off += dim
        for j in range(dim):
            p.alphas[j] = fpar[off + j]
        off += dim
        for k in range(nt):
            p.energies[k] = fpar[off + k]
        off += nt
        for k in range(nt):
            p.cre[k] = fpar[off + 2 * k]
            p.cim[k] = fpar[off + 2 * k + 1]
        for j in range(dim):
            p.nmax[j] = 0
        for k in range(nt):
            for j in range(dim):
                p.modes[k][j] = ipar[2 + k * dim + j]
                if p.modes[k][j] > p.nmax[j]:
                    p.nmax[j] = p.modes[k][j]
                if p.modes[k][j] > MAX_N:
                    raise ValueError("mode index above compiled guard")
    else:
        p.dim = 2
        for j in range(3):
            p.f[j] = fpar[j]
        p.norm_sq = 1.0
    return 0


def integrate(int kind, double[:] fpar, int[:] ipar, double[:] q0,
              double[:] sample_times, double rtol, double atol,
              double max_step, double min_step, double renorm_threshold,
              long max_steps, int with_dev, double[:] xi0,
              double density_floor, int has_density):
    """Adaptive integration sampling exactly at `sample_times`.

    Returns (points, chi, stats); chi is zeros when with_dev is 0.
    """
    cdef Params p
    build_params(kind, fpar, ipar, density_floor, has_density, &p)
    cdef int dim = p.dim
    cdef int nsamp = sample_times.shape[0]
    out = np.empty((nsamp, dim), dtype=np.float64)
    chis = np.zeros(nsamp, dtype=np.float64)
    cdef double[:, :] out_v = out
    cdef double[:] chi_v = chis

    cdef double q[MAX_DIM]
    cdef double xi[MAX_DIM]
    cdef double qs[MAX_DIM]
    cdef double xis[MAX_DIM]
    cdef double qn[MAX_DIM]
    cdef double xin[MAX_DIM]
    cdef double kv[7][MAX_DIM]
    cdef double kx[7][MAX_DIM]
    cdef double jac[MAX_DIM * MAX_DIM]
    cdef double v[MAX_DIM]
    cdef double dxi[MAX_DIM]
    cdef int j, l, i, m, si
    cdef double t0 = sample_times[0]
    cdef double t = t0
    cdef double t_target, h, hs, remaining, acc
    cdef double err, sc, err_sq, err_norm, nrm, log_accum = 0.0
    cdef double log_floor10 = 0.0
    cdef int direction, clipped, have_k1, fail
    cdef long steps = 0, rejected = 0, renorms = 0

    for j in range(dim):
        q[j] = q0[j]
    if with_dev:
        nrm = 0.0
        for j in range(dim):
            nrm += xi0[j] * xi0[j]
        nrm = sqrt(nrm)
        if nrm == 0.0:
            raise ValueError("deviation vector must be nonzero")
        for j in range(dim):
            xi[j] = xi0[j] / nrm

    if has_density:
        log_floor10 = log(density_floor * 10.0)
        if eval_logdens(&p, q, t) < log_floor10:
            raise SingularityError("initial point is inside the node floor")

    for j in range(dim):
        out_v[0, j] = q[j]
    if nsamp == 1:
        return out, chis, {"steps": 0, "rejected": 0, "renorms": 0}

    direction = 1 if sample_times[nsamp - 1] >= t0 else -1
    h = fabs(sample_times[1] - sample_times[0])
    if h > max_step:
        h = max_step
    have_k1 = 0

    si = 1
    while si < nsamp:
        t_target = sample_times[si]
        while (t - t_target) * direction < 0:
            if steps + rejected > max_steps:
                raise StepLimitError(f"step budget {max_steps} exhausted at t={t}")
            if h > max_step:
                h = max_step
            remaining = (t_target - t) * direction
            clipped = 0
            if h >= remaining:
                h = remaining
                clipped = 1
            hs = h * direction
            # --- one trial step ---
            fail = 0
            if not have_k1:
                fail = eval_rhs(&p, q, t, kv[0], jac, with_dev)
                if not fail and with_dev:
                    for j in range(dim):
                        kx[0][j] = 0.0
                        for l in range(dim):
                            kx[0][j] += jac[j * dim + l] * xi[l]
                have_k1 = not fail
            if not fail:
                for i in range(6):
                    for j in range(dim):
                        acc = 0.0
                        for m in range(i + 1):
                            acc += DA[i][m] * kv[m][j]
                        qs[j] = q[j] + hs * acc
                    if with_dev:
                        for j in range(dim):
                            acc = 0.0
                            for m in range(i + 1):
                                acc += DA[i][m] * kx[m][j]
                            xis[j] = xi[j] + hs * acc
                    fail = eval_rhs(&p, qs, t + DC[i + 1] * hs, kv[i + 1],
                                    jac, with_dev)
                    if fail:
                        break
                    if with_dev:
                        for j in range(dim):
                            kx[i + 1][j] = 0.0
                            for l in range(dim):
                                kx[i + 1][j] += jac[j * dim + l] * xis[l]
            if fail:
                rejected += 1
                h = h / 2.0
                if h < min_step:
                    raise SingularityError(
                        f"step collapsed below {min_step} at t={t}, "
                        f"q=({q[0]}, {q[1]})")
                continue
            for j in range(dim):
                qn[j] = qs[j]  # stage-7 argument is the 5th-order solution
                if with_dev:
                    xin[j] = xis[j]
            err_sq = 0.0
            for j in range(dim):
                err = 0.0
                for m in range(7):
                    err += DE[m] * kv[m][j]
                err *= hs
                sc = atol + rtol * fmax(fabs(q[j]), fabs(qn[j]))
                err_sq += (err / sc) * (err / sc)
            if not isfinite(err_sq):
                rejected += 1
                h = h / 2.0
                if h < min_step:
                    raise SingularityError(f"non-finite step at t={t}")
                continue
            err_norm = sqrt(err_sq / dim)
            if has_density and eval_logdens(&p, qn, t + hs) < log_floor10:
                rejected += 1
                h = h / 2.0
                if h < min_step:
                    raise SingularityError(
                        f"trajectory hit a node region at t={t + hs}, "
                        f"q=({qn[0]}, {qn[1]})")
                continue
            if err_norm > 1.0:
                rejected += 1
                h = h * fmax(0.2, 0.9 * pow(err_norm, -0.2))
                if h < min_step:
                    raise SingularityError(f"error control collapsed at t={t}")
                continue
            # --- accept ---
            steps += 1
            t = t_target if clipped else t + hs
            for j in range(dim):
                q[j] = qn[j]
                kv[0][j] = kv[6][j]
            if with_dev:
                for j in range(dim):
                    xi[j] = xin[j]
                    kx[0][j] = kx[6][j]
                nrm = 0.0
                for j in range(dim):
                    nrm += xi[j] * xi[j]
                nrm = sqrt(nrm)
                if nrm > renorm_threshold:
                    log_accum += log(nrm)
                    for j in range(dim):
                        xi[j] /= nrm
                        kx[0][j] /= nrm
                    renorms += 1
            have_k1 = 1
            if err_norm > 0.0:
                h = h * fmin(5.0, fmax(0.2, 0.9 * pow(err_norm, -0.2)))
            else:
                h = h * 5.0
        for j in range(dim):
            out_v[si, j] = q[j]
        if with_dev:
            nrm = 0.0
            for j in range(dim):
                nrm += xi[j] * xi[j]
            chi_v[si] = ((log_accum + log(sqrt(nrm))) / (t - t0)
                         if t != t0 else 0.0)
        si += 1

    return out, chis, {"steps": steps, "rejected": rejected, "renorms": renorms}


def velocity(int kind, double[:] fpar, int[:] ipar, double[:] q, double t):
    """Single velocity evaluation (benchmark/testing hook)."""
    cdef Params p
    build_params(kind, fpar, ipar, 1e-30, 0, &p)
    cdef double qq[MAX_DIM]
    cdef double v[MAX_DIM]
    cdef double jac[MAX_DIM * MAX_DIM]
    cdef int j
    for j in range(p.dim):
        qq[j] = q[j]
    if eval_rhs(&p, qq, t, v, jac, 0):
        raise SingularityError("velocity evaluation at a singular point")
    return tuple(v[j] for j in range(p.dim))


def velocity_jacobian(int kind, double[:] fpar, int[:] ipar, double[:] q, double t):
    cdef Params p
    build_params(kind, fpar, ipar, 1e-30, 0, &p)
    cdef double qq[MAX_DIM]
    cdef double v[MAX_DIM]
    cdef double jac[MAX_DIM * MAX_DIM]
    cdef int j, l
    for j in range(p.dim):
        qq[j] = q[j]
    if eval_rhs(&p, qq, t, v, jac, 1):
        raise SingularityError("velocity evaluation at a singular point")
    return (tuple(v[j] for j in range(p.dim)),
            [[jac[j * p.dim + l] for l in range(p.dim)] for j in range(p.dim)])
