"""Analytic wavefunction models for the three families under study.

All models are exact solutions of the Schroedinger equation for harmonic
oscillators (hbar = 1, unit masses unless configured otherwise):

* finite superpositions of oscillator eigenstates in 2 or 3 dimensions,
* the particular 2-D superposition Psi_00 + c1 Psi_10 + c2 Psi_11 that has a
  single moving nodal point ("system A" below),
* entangled pairs of coherent states ("qubit" model).

Each model evaluates Psi, its gradient and Hessian analytically, and exposes
the Bohmian velocity v = (hbar/m) Im(grad Psi / Psi).  System A and the qubit
model also carry closed-form velocity fields (see `closedforms`), which the
generic formula must reproduce; that cross-check is part of the test suite.
"""

import math
from dataclasses import dataclass

import numpy as np

from .backends import FloatBackend
from .errors import ConfigError, SingularityError

_FLOAT = FloatBackend()

HERMITE_MAX_N = 60  # recurrence guard; far above any mode used here


def hermite(n, x):
    """Physicists' Hermite polynomial H_n(x) by the three-term recurrence.

    Works elementwise on numpy arrays and on backend scalars alike.
    """
    if n < 0 or int(n) != n:
        raise ValueError(f"order must be a nonnegative integer, got {n}")
    if n > HERMITE_MAX_N:
        raise ValueError(f"Hermite order {n} above guard {HERMITE_MAX_N}")
    h_prev = x * 0 + 1  # H_0 in the scalar type of x
    if n == 0:
        return h_prev
    h = 2 * x
    for k in range(1, n):
        h, h_prev = 2 * x * h - 2 * k * h_prev, h
    return h


def _hermite_ladder(n_max, u):
    """H_0..H_n_max at u as a list (shared recurrence)."""
    out = [u * 0 + 1]
    if n_max >= 1:
        out.append(2 * u)
    for k in range(1, n_max):
        out.append(2 * u * out[k] - 2 * k * out[k - 1])
    return out


@dataclass
class OscillatorSpec:
    """Frequencies and masses of an anisotropic harmonic oscillator."""

    omegas: tuple
    masses: tuple = None
    hbar: float = 1.0

    def __post_init__(self):
        self.omegas = tuple(self.omegas)
        if self.masses is None:
            self.masses = tuple(1.0 for _ in self.omegas)
        else:
            self.masses = tuple(self.masses)
        if len(self.masses) != len(self.omegas):
            raise ConfigError("masses and omegas must have equal length")
        for w in self.omegas:
            if not w > 0:
                raise ConfigError(f"frequencies must be positive, got {w}")
        for m in self.masses:
            if not m > 0:
                raise ConfigError(f"masses must be positive, got {m}")

    @property
    def dim(self):
        return len(self.omegas)


def energy(spec, mode):
    """E = sum_i (n_i + 1/2) hbar omega_i for the given mode."""
    if len(mode) != spec.dim:
        raise ConfigError("mode length does not match oscillator dimension")
    e = 0
    for n, w in zip(mode, spec.omegas):
        e = e + (n + 0.5) * spec.hbar * w
    return e


def _axis_constants(spec, bk):
    """Per-axis (alpha, norm_base) with alpha = m*omega/hbar."""
    alphas, norms = [], []
    for w, m in zip(spec.omegas, spec.masses):
        a = bk.real(m) * bk.real(w) / bk.real(spec.hbar)
        alphas.append(a)
        norms.append((a / bk.pi) ** bk.real(0.25))
    return alphas, norms


def eigenstate(spec, mode, q, t, backend=None):
    """Product eigenfunction with its exp(-iEt) phase at configuration q."""
    bk = backend or _FLOAT
    if len(mode) != spec.dim or len(q) != spec.dim:
        raise ConfigError("mode/position length does not match dimension")
    alphas, norms = _axis_constants(spec, bk)
    amp = bk.complex(1)
    for n, x, a, nb in zip(mode, q, alphas, norms):
        u = bk.sqrt(a) * x
        c = nb / bk.sqrt(bk.real(2 ** n * math.factorial(n)))
        amp = amp * c * hermite(n, u) * bk.exp(-u * u / 2)
    e = energy(spec, mode)
    return amp * bk.cexp(bk.complex(0, -e * t))


@dataclass
class SuperpositionSpec:
    """Finite eigenstate superposition: terms are (coefficient, mode) pairs."""

    terms: list
    oscillator: OscillatorSpec
    normalized: bool = False

    def __post_init__(self):
        if not self.terms:
            raise ConfigError("superposition needs at least one term")
        dim = self.oscillator.dim
        total = 0.0
        for c, mode in self.terms:
            if len(mode) != dim:
                raise ConfigError(f"mode {mode} does not match dimension {dim}")
            total += abs(c) ** 2
        if total == 0:
            raise ConfigError("superposition has all-zero coefficients")
        if self.normalized and abs(total - 1.0) > 1e-12:
            raise ConfigError(f"coefficients not normalized: sum|c|^2 = {total}")


def superposition_eval(spec, q, t, backend=None):
    """Psi(q, t) for a SuperpositionSpec (plain linear combination)."""
    bk = backend or _FLOAT
    amp = bk.complex(0)
    for c, mode in spec.terms:
        if isinstance(c, complex):
            c = bk.complex(c.real, c.imag)
        amp = amp + c * eigenstate(spec.oscillator, mode, q, t, bk)
    return amp


class SuperpositionModel:
    """Evaluatable model for a finite eigenstate superposition.

    Evaluation shares one Hermite ladder per axis across all terms; first and
    second axis derivatives come from
        phi_n'(x)  = sqrt(alpha) e^{-u^2/2} N_n (2n H_{n-1}(u) - u H_n(u))
        phi_n''(x) = alpha (u^2 - (2n+1)) phi_n(x),
    with u = sqrt(alpha) x, alpha = m omega / hbar.
    """

    def __init__(self, spec, backend=None):
        self.spec = spec
        self.bk = backend or _FLOAT
        bk = self.bk
        osc = spec.oscillator
        self.dims = osc.dim
        self.hbar = bk.real(osc.hbar)
        self.masses = [bk.real(m) for m in osc.masses]
        self.omegas = [bk.real(w) for w in osc.omegas]
        self.alphas = [m * w / self.hbar for m, w in zip(self.masses, self.omegas)]
        self.coeffs = [c for c, _ in spec.terms]
        self.modes = [tuple(mode) for _, mode in spec.terms]
        self.energies = [energy(osc, mode) for mode in self.modes]
        self.n_max = [max(mode[j] for mode in self.modes) for j in range(self.dims)]
        # fold the axis norm constant N_n = (alpha/pi)^(1/4)/sqrt(2^n n!) per term
        self._norms = []
        for mode in self.modes:
            per_axis = []
            for n, a in zip(mode, self.alphas):
                per_axis.append(
                    (a / bk.pi) ** bk.real(0.25)
                    / bk.sqrt(bk.real(2 ** n * math.factorial(n)))
                )
            self._norms.append(per_axis)

    def norm_sq(self):
        return sum(abs(c) ** 2 for c in self.coeffs)

    def _axis_tables(self, q, want_d2=False):
        """Per axis: phi_n, phi_n' (and phi_n'') for n up to the axis maximum."""
        bk = self.bk
        tables = []
        for j in range(self.dims):
            a = self.alphas[j]
            sa = bk.sqrt(a)
            u = sa * q[j]
            gauss = bk.exp(-u * u / 2)
            hs = _hermite_ladder(self.n_max[j], u)
            phis, dphis, d2phis = [], [], []
            for n in range(self.n_max[j] + 1):
                base = hs[n] * gauss  # un-normalized phi_n
                phis.append(base)
                hm1 = hs[n - 1] if n >= 1 else 0
                dphis.append(sa * gauss * (2 * n * hm1 - u * hs[n]))
                if want_d2:
                    d2phis.append(a * (u * u - (2 * n + 1)) * base)
            tables.append((phis, dphis, d2phis))
        return tables

    def _assemble(self, q, t, order):
        """Returns psi (order 0), plus gradient (1), plus Hessian (2)."""
        bk = self.bk
        tables = self._axis_tables(q, want_d2=(order >= 2))
        psi = bk.complex(0)
        grad = [bk.complex(0) for _ in range(self.dims)] if order >= 1 else None
        hess = (
            [[bk.complex(0) for _ in range(self.dims)] for _ in range(self.dims)]
            if order >= 2
            else None
        )
        for c, mode, norms, e in zip(self.coeffs, self.modes, self._norms, self.energies):
            phase = bk.cexp(bk.complex(0, -e * t))
            vals = [tables[j][0][mode[j]] * norms[j] for j in range(self.dims)]
            prod = bk.complex(1)
            for v in vals:
                prod = prod * v
            term = c * phase
            psi = psi + term * prod
            if order >= 1:
                dvals = [tables[j][1][mode[j]] * norms[j] for j in range(self.dims)]
                for j in range(self.dims):
                    rest = term
                    for l in range(self.dims):
                        rest = rest * (dvals[l] if l == j else vals[l])
                    grad[j] = grad[j] + rest
                if order >= 2:
                    d2vals = [tables[j][2][mode[j]] * norms[j] for j in range(self.dims)]
                    for j in range(self.dims):
                        for l in range(j, self.dims):
                            rest = term
                            for k in range(self.dims):
                                if k == j == l:
                                    rest = rest * d2vals[k]
                                elif k == j or k == l:
                                    rest = rest * dvals[k]
                                else:
                                    rest = rest * vals[k]
                            hess[j][l] = hess[j][l] + rest
        if order >= 2:
            for j in range(self.dims):
                for l in range(j):
                    hess[j][l] = hess[l][j]
        if order == 0:
            return psi
        if order == 1:
            return psi, grad
        return psi, grad, hess

    def psi(self, q, t):
        return self._assemble(q, t, 0)

    def dpsi(self, q, t):
        return self._assemble(q, t, 1)

    def d2psi(self, q, t):
        return self._assemble(q, t, 2)

    def log_density(self, q, t):
        psi = self.psi(q, t)
        m2 = abs(psi) ** 2 / self.norm_sq()
        if m2 == 0:
            return bk_neg_inf(self.bk)
        return self.bk.log(m2)

    def velocity(self, q, t):
        """Generic guidance law v_j = (hbar/m_j) Im(d_j Psi / Psi)."""
        psi, grad = self.dpsi(q, t)
        if abs(psi) ** 2 / self.norm_sq() < self.bk.density_floor:
            raise SingularityError(f"|Psi|^2 under floor at q={q}, t={t}")
        return tuple(
            self.hbar / self.masses[j] * (grad[j] / psi).imag for j in range(self.dims)
        )

    def velocity_jacobian(self, q, t):
        """d v_j / d q_l from analytic first and second derivatives."""
        psi, grad, hess = self.d2psi(q, t)
        if abs(psi) ** 2 / self.norm_sq() < self.bk.density_floor:
            raise SingularityError(f"|Psi|^2 under floor at q={q}, t={t}")
        inv = 1 / psi
        jac = [[0.0] * self.dims for _ in range(self.dims)]
        for j in range(self.dims):
            gj = grad[j] * inv
            for l in range(self.dims):
                jac[j][l] = (
                    self.hbar
                    / self.masses[j]
                    * (hess[j][l] * inv - gj * (grad[l] * inv)).imag
                )
        return jac

    def density_grid(self, xs, ys, t):
        """|Psi|^2 / norm^2 on the outer grid xs x ys (2-D models, numpy floats)."""
        if self.dims != 2:
            raise ConfigError("density_grid is for 2-D models")
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        psi = np.zeros((xs.size, ys.size), dtype=complex)
        ax_x = self._numpy_axis_values(0, xs)
        ax_y = self._numpy_axis_values(1, ys)
        for c, mode, e in zip(self.coeffs, self.modes, self.energies):
            phase = complex(c) * np.exp(-1j * float(e) * float(t))
            psi += phase * np.outer(ax_x[mode[0]], ax_y[mode[1]])
        return np.abs(psi) ** 2 / float(self.norm_sq())

    def _numpy_axis_values(self, j, x):
        a = float(self.alphas[j])
        u = math.sqrt(a) * x
        gauss = np.exp(-u * u / 2)
        hs = _hermite_ladder(self.n_max[j], u)
        out = []
        for n in range(self.n_max[j] + 1):
            norm = (a / math.pi) ** 0.25 / math.sqrt(2 ** n * math.factorial(n))
            out.append(norm * hs[n] * gauss)
        return out


def bk_neg_inf(bk):
    return bk.real(float("-inf")) if bk.name == "hardware" else -bk.real("inf")


def coherent_state_1d(a0, sigma, omega, m, x, t, hbar=1.0, backend=None):
    """1-D coherent state Psi(x, t) with A(t) = a0 exp(i(sigma - omega t)).

    Gaussian of fixed width centered on the classical path
    x_c(t) = sqrt(2 hbar / m omega) Re A(t), with phase
    sqrt(2 m omega / hbar) Im A(t) x + (a0^2 sin(2(omega t - sigma)) - omega t)/2.
    """
    bk = backend or _FLOAT
    a0 = bk.real(a0)
    sigma = bk.real(sigma)
    omega = bk.real(omega)
    m = bk.real(m)
    hbar = bk.real(hbar)
    al = m * omega / hbar
    re_a = a0 * bk.cos(sigma - omega * t)
    im_a = a0 * bk.sin(sigma - omega * t)
    xc = bk.sqrt(2 / al) * re_a
    xi = (a0 * a0 * bk.sin(2 * (omega * t - sigma)) - omega * t) / 2
    mag = (al / bk.pi) ** bk.real(0.25) * bk.exp(-al * (x - xc) ** 2 / 2)
    return mag * bk.cexp(bk.complex(0, bk.sqrt(2 * al) * im_a * x + xi))


@dataclass
class QubitSpec:
    """Entangled coherent-state pair c1 Psi_R(x)Psi_L(y) + c2 Psi_L(x)Psi_R(y)."""

    c1: float
    c2: float
    a0: float = 2.5
    omega_x: float = 1.0
    omega_y: float = math.sqrt(3)
    m_x: float = 1.0
    m_y: float = 1.0
    sigma_x: float = 0.0
    sigma_y: float = 0.0
    hbar: float = 1.0

    def __post_init__(self):
        if abs(self.c1 ** 2 + self.c2 ** 2 - 1.0) > 1e-12:
            raise ConfigError(
                f"qubit coefficients must satisfy c1^2 + c2^2 = 1, got "
                f"{self.c1 ** 2 + self.c2 ** 2}"
            )
        if not self.a0 > 0:
            raise ConfigError("a0 must be positive")
        if not (self.omega_x > 0 and self.omega_y > 0):
            raise ConfigError("frequencies must be positive")


class QubitModel:
    """Two-mode entangled coherent state, canonical single-formula evaluation.

    Psi factorizes as  (common Gaussian+phase) * D  with
        D = c1 exp(p) + c2 exp(-p),    p = (f_x - f_y) - i (g_x - g_y),
        f_i = sqrt(2 omega_i) a0 q_i cos(omega_i t - sigma_i),
        g_i = sqrt(2 omega_i) a0 q_i sin(omega_i t - sigma_i),
    which makes nodes (D = 0), derivatives, and a stable log-density cheap:
    p is linear in (x, y), so d^2 D factorizes through p's gradient.
    """

    dims = 2

    def __init__(self, spec, backend=None):
        self.spec = spec
        self.bk = backend or _FLOAT
        bk = self.bk
        if spec.m_x != 1.0 or spec.m_y != 1.0 or spec.hbar != 1.0:
            # the closed forms below are written for m = hbar = 1
            raise ConfigError("qubit model assumes unit masses and hbar")
        self.c1 = bk.real(spec.c1)
        self.c2 = bk.real(spec.c2)
        self.a0 = bk.real(spec.a0)
        self.wx = bk.real(spec.omega_x)
        self.wy = bk.real(spec.omega_y)
        self.sx = bk.real(spec.sigma_x)
        self.sy = bk.real(spec.sigma_y)
        self.rx = bk.sqrt(2 * self.wx) * self.a0  # f_x = rx * x * cos(...)
        self.ry = bk.sqrt(2 * self.wy) * self.a0
        self.hbar = bk.real(1.0)
        self.masses = (bk.real(1.0), bk.real(1.0))

    def norm_sq(self):
        bk = self.bk
        return 1 + 2 * self.c1 * self.c2 * bk.exp(-4 * self.a0 * self.a0)

    def _trig(self, t):
        bk = self.bk
        px = self.wx * t - self.sx
        py = self.wy * t - self.sy
        return bk.cos(px), bk.sin(px), bk.cos(py), bk.sin(py)

    def _prefactor(self, x, y, t):
        """Common factor of Psi: Gaussian envelope and global phase."""
        bk = self.bk
        cx, sx_, cy, sy_ = self._trig(t)
        a2 = self.a0 * self.a0
        re = (
            -(self.wx * x * x + self.wy * y * y) / 2
            - a2 * (cx * cx + cy * cy)
        )
        im = (a2 * (2 * sx_ * cx + 2 * sy_ * cy) - (self.wx + self.wy) * t) / 2
        amp = (self.wx * self.wy) ** bk.real(0.25) / bk.sqrt(bk.pi)
        return amp * bk.exp(re) * bk.cexp(bk.complex(0, im))

    def _p_and_grad(self, x, y, t):
        bk = self.bk
        cx, sx_, cy, sy_ = self._trig(t)
        fx = self.rx * x * cx
        fy = self.ry * y * cy
        gx = self.rx * x * sx_
        gy = self.ry * y * sy_
        p = bk.complex(fx - fy, -(gx - gy))
        dpdx = bk.complex(self.rx * cx, -self.rx * sx_)
        dpdy = bk.complex(-self.ry * cy, self.ry * sy_)
        return p, dpdx, dpdy

    def psi(self, q, t):
        bk = self.bk
        x, y = q
        p, _, _ = self._p_and_grad(x, y, t)
        d = self.c1 * bk.cexp(p) + self.c2 * bk.cexp(-p)
        return self._prefactor(x, y, t) * d

    def dpsi(self, q, t):
        bk = self.bk
        x, y = q
        pre = self._prefactor(x, y, t)
        p, px, py = self._p_and_grad(x, y, t)
        ep = bk.cexp(p)
        em = bk.cexp(-p)
        d = self.c1 * ep + self.c2 * em
        dp = self.c1 * ep - self.c2 * em  # dD/dp
        psi = pre * d
        # d/dx log(pre) = -wx x  (real), likewise for y
        gx = pre * (dp * px - self.wx * x * d)
        gy = pre * (dp * py - self.wy * y * d)
        return psi, [gx, gy]

    def d2psi(self, q, t):
        bk = self.bk
        x, y = q
        pre = self._prefactor(x, y, t)
        p, px, py = self._p_and_grad(x, y, t)
        ep = bk.cexp(p)
        em = bk.cexp(-p)
        d = self.c1 * ep + self.c2 * em
        dp = self.c1 * ep - self.c2 * em
        psi = pre * d
        lx = -self.wx * x  # d log(pre) / dx
        ly = -self.wy * y
        gx = dp * px + lx * d  # gradient over the prefactor
        gy = dp * py + ly * d
        # p is linear in (x,y): d2 D/dx2 = px^2 D etc.; prefactor is Gaussian
        hxx = d * px * px + 2 * lx * dp * px + (lx * lx - self.wx) * d
        hyy = d * py * py + 2 * ly * dp * py + (ly * ly - self.wy) * d
        hxy = d * px * py + lx * dp * py + ly * dp * px + lx * ly * d
        grad = [pre * gx, pre * gy]
        hess = [[pre * hxx, pre * hxy], [pre * hxy, pre * hyy]]
        return psi, grad, hess

    def log_density(self, q, t):
        bk = self.bk
        x, y = q
        cx, sx_, cy, sy_ = self._trig(t)
        a2 = self.a0 * self.a0
        u = self.rx * x * cx - self.ry * y * cy
        th = self.rx * x * sx_ - self.ry * y * sy_
        au = abs(u)
        pt = self.c1 * self.c1 * bk.exp(2 * (u - au))
        qt = self.c2 * self.c2 * bk.exp(-2 * (u + au))
        rt = 2 * self.c1 * self.c2 * bk.exp(-2 * au)
        dn = pt + qt + rt * bk.cos(2 * th)
        if dn <= 0:
            return bk_neg_inf(bk)
        const = bk.log(bk.sqrt(self.wx * self.wy) / bk.pi) - bk.log(self.norm_sq())
        return (
            const
            - self.wx * x * x
            - self.wy * y * y
            - 2 * a2 * (cx * cx + cy * cy)
            + 2 * au
            + bk.log(dn)
        )

    def velocity(self, q, t):
        from .closedforms import qubit_velocity

        vx, vy = qubit_velocity(self, q[0], q[1], t)
        return (vx, vy)

    def velocity_jacobian(self, q, t):
        from .closedforms import qubit_jacobian

        return qubit_jacobian(self, q[0], q[1], t)[1]

    def density_grid(self, xs, ys, t):
        """Vectorized |Psi|^2 / norm^2 on xs x ys via the stable log form."""
        xs = np.asarray(xs, dtype=float)[:, None]
        ys = np.asarray(ys, dtype=float)[None, :]
        wx, wy = float(self.wx), float(self.wy)
        rx, ry = float(self.rx), float(self.ry)
        c1, c2 = float(self.c1), float(self.c2)
        a2 = float(self.a0) ** 2
        cx = math.cos(wx * t - float(self.sx))
        sx_ = math.sin(wx * t - float(self.sx))
        cy = math.cos(wy * t - float(self.sy))
        sy_ = math.sin(wy * t - float(self.sy))
        u = rx * xs * cx - ry * ys * cy
        th = rx * xs * sx_ - ry * ys * sy_
        au = np.abs(u)
        dn = (
            c1 * c1 * np.exp(2 * (u - au))
            + c2 * c2 * np.exp(-2 * (u + au))
            + 2 * c1 * c2 * np.exp(-2 * au) * np.cos(2 * th)
        )
        ln = (
            math.log(math.sqrt(wx * wy) / math.pi)
            - math.log(float(self.norm_sq()))
            - wx * xs * xs
            - wy * ys * ys
            - 2 * a2 * (cx * cx + cy * cy)
            + 2 * au
            + np.log(np.maximum(dn, 1e-300))
        )
        return np.exp(ln)


def qubit_wavefunction(spec, x, y, t, backend=None):
    """Canonical closed-form evaluation of the entangled two-qubit state."""
    return QubitModel(spec, backend).psi((x, y), t)


def qubit_product_form(spec, x, y, t, backend=None):
    """Test oracle: the same state assembled from 1-D coherent states."""
    bk = backend or _FLOAT
    pr_x = coherent_state_1d(spec.a0, spec.sigma_x, spec.omega_x, spec.m_x, x, t, spec.hbar, bk)
    pl_x = coherent_state_1d(
        spec.a0, spec.sigma_x + bk.pi, spec.omega_x, spec.m_x, x, t, spec.hbar, bk
    )
    pr_y = coherent_state_1d(spec.a0, spec.sigma_y, spec.omega_y, spec.m_y, y, t, spec.hbar, bk)
    pl_y = coherent_state_1d(
        spec.a0, spec.sigma_y + bk.pi, spec.omega_y, spec.m_y, y, t, spec.hbar, bk
    )
    return spec.c1 * pr_x * pl_y + spec.c2 * pl_x * pr_y


def system_a_spec(c1=1 / math.sqrt(2), c2=0.5, omega2=1 / math.sqrt(2), omega1=1.0):
    """SuperpositionSpec for Psi_00 + c1 Psi_10 + c2 Psi_11."""
    osc = OscillatorSpec(omegas=(omega1, omega2))
    return SuperpositionSpec(
        terms=[(1.0, (0, 0)), (c1, (1, 0)), (c2, (1, 1))], oscillator=osc
    )


class SystemAModel(SuperpositionModel):
    """The 2-D three-term superposition with one moving nodal point.

    Inherits generic evaluation; `velocity`/`velocity_jacobian` are overridden
    with the closed forms written in terms of
        W = Psi / Psi_00 = 1 + A x e^{-i w1 t} + B x y e^{-i (w1+w2) t},
        A = sqrt(2 w1) c1,   B = 2 sqrt(w1 w2) c2.
    """

    def __init__(self, c1=1 / math.sqrt(2), c2=0.5, omega2=1 / math.sqrt(2),
                 omega1=1.0, backend=None):
        bk = backend or _FLOAT
        omega1 = bk.real(omega1)
        omega2 = bk.real(omega2)
        c1 = bk.real(c1)
        c2 = bk.real(c2)
        super().__init__(system_a_spec(c1, c2, omega2, omega1), bk)
        self.c1p = c1
        self.c2p = c2
        self.w1 = omega1
        self.w2 = omega2
        self.A = bk.sqrt(2 * omega1) * c1
        self.B = 2 * bk.sqrt(omega1 * omega2) * c2

    def velocity(self, q, t):
        from .closedforms import system_a_velocity

        return system_a_velocity(self, q[0], q[1], t)

    def velocity_jacobian(self, q, t):
        from .closedforms import system_a_jacobian

        return system_a_jacobian(self, q[0], q[1], t)[1]

    def log_density(self, q, t):
        # |Psi|^2 = |Psi_00|^2 G with G = |W|^2; log G from the closed form
        from .closedforms import system_a_g

        bk = self.bk
        x, y = q
        g = system_a_g(self, x, y, t)
        if g <= 0:
            return bk_neg_inf(bk)
        return (
            bk.log(bk.sqrt(self.w1 * self.w2) / bk.pi)
            - self.w1 * x * x
            - self.w2 * y * y
            + bk.log(g)
            - bk.log(self.norm_sq())
        )

    def node_position(self, t):
        from .closedforms import system_a_node

        return system_a_node(self, t)


def gradient(model, q, t):
    """Analytic gradient of Psi; raises near nodes (guidance law divides by Psi)."""
    psi, grad = model.dpsi(q, t)
    floor = model.bk.density_floor
    if abs(psi) ** 2 / model.norm_sq() < floor:
        raise SingularityError(f"|Psi|^2 under singularity floor at q={q}, t={t}")
    return grad


def fd_gradient(model, q, t, scale=1e-6):
    """Central-difference gradient with step scale*max(1,|q_i|); cross-check oracle."""
    out = []
    q = list(q)
    for j in range(model.dims):
        h = scale * max(1.0, abs(float(q[j])))
        qp = list(q)
        qm = list(q)
        qp[j] = q[j] + h
        qm[j] = q[j] - h
        out.append((model.psi(qp, t) - model.psi(qm, t)) / (2 * h))
    return out


def quantum_potential(model, q, t, scale=1e-4):
    """Q = -(hbar^2/2) sum_j (1/m_j) d2|Psi|/dq_j^2 / |Psi| by central differences."""
    psi0 = abs(model.psi(q, t))
    if psi0 ** 2 / model.norm_sq() < model.bk.density_floor:
        raise SingularityError(f"quantum potential at a near-node point q={q}")
    hbar = getattr(model, "hbar", 1.0)
    masses = getattr(model, "masses", [1.0] * model.dims)
    total = 0.0
    for j in range(model.dims):
        h = scale * max(1.0, abs(float(q[j])))
        qp = list(q)
        qm = list(q)
        qp[j] = q[j] + h
        qm[j] = q[j] - h
        d2 = (abs(model.psi(qp, t)) - 2 * psi0 + abs(model.psi(qm, t))) / (h * h)
        total += (hbar * hbar / (2 * masses[j])) * d2
    return -total / psi0
