"""Trajectory integration and finite-time Lyapunov machinery.

The integrator is an embedded Dormand-Prince 5(4) pair with three
domain-specific behaviours baked in:

* it steps exactly onto every sample time t0 + k*dt (no dense-output
  interpolation), so recorded samples are reproducible bit for bit;
* a trial step whose endpoint density |Psi|^2 falls below 10x the
  singularity floor is rejected and retried at half the step, down to a
  minimum step, because near-node spirals need resolved small steps;
* the deviation vector xi rides along passively: it is advanced through the
  same accepted steps with the variational equations dxi/dt = J(q,t) xi,
  but does not influence step-size control.  A trajectory therefore takes
  the same steps with or without LCN co-integration, and the xi
  renormalization threshold cannot perturb the orbit.

Everything is generic over the scalar backend; hardware runs are routed to
the compiled kernels when the extension is importable and the model has a
kernel implementation.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .backends import FloatBackend, get_backend
from .errors import (
    ConfigError,
    InsufficientSpanError,
    SingularityError,
    StepLimitError,
)

try:
    from . import _kernels
except ImportError:  # pure-Python fallback
    _kernels = None

uses_compiled_kernels = _kernels is not None


@dataclass
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = 0.1
    min_step: float = 1e-12
    dt_sample: float = 0.05
    digits: int = None  # None -> hardware
    renorm_threshold: float = 1e6
    max_steps: int = 50_000_000
    use_compiled: bool = True

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.dt_sample <= 0:
            raise ConfigError("sample interval must be positive")
        if self.min_step <= 0 or self.min_step >= self.max_step:
            raise ConfigError(
                f"need 0 < min_step < max_step, got {self.min_step} / {self.max_step}"
            )

    def backend(self):
        return get_backend(self.digits)


@dataclass
class TrajectorySample:
    t: object
    q: tuple
    xi: tuple = None
    chi: object = None


@dataclass
class TrajectoryPath:
    times: object  # array (hardware) or list (extended)
    points: object  # (n, dim)
    chi: object = None
    stats: dict = field(default_factory=dict)
    backend_name: str = "hardware"

    @property
    def dim(self):
        return len(self.points[0])

    def samples(self):
        for i in range(len(self.times)):
            chi = None if self.chi is None else self.chi[i]
            yield TrajectorySample(self.times[i], tuple(self.points[i]), chi=chi)

    def final_point(self):
        return tuple(self.points[-1])


@dataclass
class LCNSeries:
    times: object
    chi: object
    classification: str = "undetermined"
    slope: float = None
    trailing_mean: float = None


# Dormand-Prince 5(4) tableau as exact rationals, instantiated per backend
# so extended-precision runs do not inherit double-rounded coefficients.
_DP_A = (
    ("1/5",),
    ("3/40", "9/40"),
    ("44/45", "-56/15", "32/9"),
    ("19372/6561", "-25360/2187", "64448/6561", "-212/729"),
    ("9017/3168", "-355/33", "46732/5247", "49/176", "-5103/18656"),
    ("35/384", "0", "500/1113", "125/192", "-2187/6784", "11/84"),
)
_DP_C = ("0", "1/5", "3/10", "4/5", "8/9", "1", "1")
# y5 - y4 weights (error estimator)
_DP_E = ("71/57600", "0", "-71/16695", "71/1920", "-17253/339200", "22/525", "-1/40")

_tableau_cache = {}


def _tableau(bk):
    key = (bk.name, getattr(bk, "digits", 0))
    if key not in _tableau_cache:
        def r(s):
            f = Fraction(s)
            return bk.real(f.numerator) / bk.real(f.denominator)

        a = tuple(tuple(r(x) for x in row) for row in _DP_A)
        c = tuple(r(x) for x in _DP_C)
        e = tuple(r(x) for x in _DP_E)
        _tableau_cache[key] = (a, c, e)
    return _tableau_cache[key]


def bohm_velocity(model, q, t):
    """Guidance-law velocity; closed form where the model provides one."""
    return model.velocity(q, t)


def velocity_jacobian(model, q, t):
    """Spatial Jacobian of the velocity field (analytic for all families)."""
    return model.velocity_jacobian(q, t)


def fd_velocity_jacobian(model, q, t, scale=1e-6):
    """Central-difference Jacobian; oracle for the analytic one."""
    d = model.dims
    jac = [[0.0] * d for _ in range(d)]
    for l in range(d):
        h = scale * max(1.0, abs(float(q[l])))
        qp = list(q)
        qm = list(q)
        qp[l] = q[l] + h
        qm[l] = q[l] - h
        vp = model.velocity(qp, t)
        vm = model.velocity(qm, t)
        for j in range(d):
            jac[j][l] = (vp[j] - vm[j]) / (2 * h)
    return jac


class _PurePath:
    """One adaptive integration pass; collects samples at fixed intervals."""

    def __init__(self, model, cfg, bk, with_dev, xi0):
        self.model = model
        self.cfg = cfg
        self.bk = bk
        self.dim = model.dims
        self.with_dev = with_dev
        self.has_density = getattr(model, "log_density", None) is not None
        floor = bk.density_floor
        self.log_floor10 = bk.log(floor * 10) if self.has_density else None
        self.a, self.c, self.e = _tableau(bk)
        if with_dev:
            norm = bk.hypot(*xi0)
            if norm == 0:
                raise ConfigError("deviation vector must be nonzero")
            self.xi = [x / norm for x in xi0]
            self.log_accum = bk.real(0)
        else:
            self.xi = None

    def rhs(self, q, t):
        v = self.model.velocity(q, t)
        if not self.with_dev:
            return v, None
        jac = self.model.velocity_jacobian(q, t)
        dxi = [
            sum(jac[j][l] * self.xi_stage[l] for l in range(self.dim))
            for j in range(self.dim)
        ]
        return v, dxi

    def run(self, q0, t0, t_end, sample_times):
        bk = self.bk
        cfg = self.cfg
        model = self.model
        dim = self.dim
        q = [bk.real(v) for v in q0]
        t = bk.real(t0)
        t_end = bk.real(t_end)
        direction = 1 if t_end >= t else -1
        if self.has_density and model.log_density(q, t) < self.log_floor10:
            raise SingularityError(f"initial point is inside the node floor: {q0}")

        xi = self.xi
        out_q = [tuple(q)]
        out_chi = [bk.real(0)] if self.with_dev else None
        stats = {"steps": 0, "rejected": 0, "renorms": 0}

        k1 = None
        h = bk.real(cfg.max_step)
        if len(sample_times) > 1:
            dt0 = abs(sample_times[1] - sample_times[0])
            if dt0 < h:
                h = bk.real(dt0)
        sample_idx = 1
        a, c, e = self.a, self.c, self.e
        rtol = bk.real(cfg.rtol)
        atol = bk.real(cfg.atol)
        max_step = bk.real(cfg.max_step)
        min_step = bk.real(cfg.min_step)
        while sample_idx < len(sample_times):
            t_target = bk.real(sample_times[sample_idx])
            while (t - t_target) * direction < 0:
                if stats["steps"] + stats["rejected"] > cfg.max_steps:
                    raise StepLimitError(
                        f"step budget {cfg.max_steps} exhausted at t={bk.to_float(t)}"
                    )
                if h > max_step:
                    h = max_step
                # never step past the next sample time
                remaining = (t_target - t) * direction
                clipped = False
                if h >= remaining:
                    h = remaining
                    clipped = True
                hs = h * direction
                step = self._attempt(q, xi, t, hs, k1)
                if step is None:  # singular or non-finite: halve and retry
                    stats["rejected"] += 1
                    h = h / 2
                    if h < min_step:
                        raise SingularityError(
                            f"step collapsed below {bk.to_float(min_step)} at "
                            f"t={bk.to_float(t)}, q={[bk.to_float(v) for v in q]}"
                        )
                    continue
                q_new, xi_new, err_norm, k_last = step
                if err_norm > 1:
                    stats["rejected"] += 1
                    h = h * bk.real(max(0.2, 0.9 * bk.to_float(err_norm) ** -0.2))
                    if h < min_step:
                        raise SingularityError(
                            f"error control collapsed the step at t={bk.to_float(t)}"
                        )
                    continue
                stats["steps"] += 1
                t = t_target if clipped else t + hs
                q = q_new
                k1 = k_last  # FSAL
                if xi is not None:
                    xi = xi_new
                    nrm = bk.hypot(*xi)
                    if nrm > cfg.renorm_threshold:
                        self.log_accum = self.log_accum + bk.log(nrm)
                        xi = [x / nrm for x in xi]
                        # the cached FSAL stage is linear in xi: rescale it too
                        k1 = (k1[0], [d / nrm for d in k1[1]])
                        stats["renorms"] += 1
                if err_norm > 0:
                    h = h * bk.real(min(5.0, max(0.2, 0.9 * bk.to_float(err_norm) ** -0.2)))
                else:
                    h = h * 5
            out_q.append(tuple(q))
            if self.with_dev:
                span = t - bk.real(sample_times[0])
                nrm = bk.hypot(*xi)
                chi = (self.log_accum + bk.log(nrm)) / span if span != 0 else bk.real(0)
                out_chi.append(chi)
            sample_idx += 1
        self.xi = xi
        return out_q, out_chi, stats

    def _attempt(self, q, xi, t, hs, k1):
        """One trial step from (q, xi, t) by hs; returns None to force halving."""
        bk = self.bk
        dim = self.dim
        model = self.model
        with_dev = xi is not None
        self.xi_stage = xi
        try:
            if k1 is None:
                v, dxi = self.rhs(q, t)
                k1 = (v, dxi)
            ks = [k1]
            for i in range(6):
                qs = [
                    q[j] + hs * sum(self.a[i][m] * ks[m][0][j] for m in range(i + 1))
                    for j in range(dim)
                ]
                if with_dev:
                    self.xi_stage = [
                        xi[j] + hs * sum(self.a[i][m] * ks[m][1][j] for m in range(i + 1))
                        for j in range(dim)
                    ]
                ks.append(self.rhs(qs, t + self.c[i + 1] * hs))
            # stage 7 argument is the 5th-order solution (FSAL)
            q_new = qs
            xi_new = self.xi_stage if with_dev else None
        except (SingularityError, OverflowError, ZeroDivisionError, ValueError):
            return None
        err_norm_sq = bk.real(0)
        for j in range(dim):
            err = hs * sum(self.e[m] * ks[m][0][j] for m in range(7))
            sc = self.cfg.atol + self.cfg.rtol * max(abs(q[j]), abs(q_new[j]))
            err_norm_sq = err_norm_sq + (err / sc) ** 2
        if not bk.is_finite(err_norm_sq):
            return None
        err_norm = bk.sqrt(err_norm_sq / dim)
        if self.has_density:
            if model.log_density(q_new, t + hs) < self.log_floor10:
                return None
        return q_new, xi_new, err_norm, ks[6]


def _sample_times(t0, t_end, dt):
    span = abs(t_end - t0)
    sign = 1.0 if t_end >= t0 else -1.0
    n = int(math.floor(float(span) / float(dt) + 1e-9))
    times = [t0 + sign * k * dt for k in range(n + 1)]
    if abs(float(span) - n * float(dt)) > 1e-9 * max(1.0, float(span)):
        times.append(t_end)
    return times


def _kernel_pack(model):
    """(kind, float params, int params) for models the extension understands."""
    from . import wavefunctions as wf

    bk = getattr(model, "bk", None)
    if bk is not None and bk.name != "hardware":
        return None
    if isinstance(model, wf.SystemAModel):
        f = np.array(
            [float(model.A), float(model.B), float(model.w1), float(model.w2),
             float(model.norm_sq())],
            dtype=float,
        )
        return 1, f, np.zeros(0, dtype=np.int32)
    if isinstance(model, wf.QubitModel):
        f = np.array(
            [float(model.c1), float(model.c2), float(model.rx), float(model.ry),
             float(model.wx), float(model.wy), float(model.sx), float(model.sy),
             float(model.a0), float(model.norm_sq())],
            dtype=float,
        )
        return 2, f, np.zeros(0, dtype=np.int32)
    if isinstance(model, wf.SuperpositionModel):
        dim = model.dims
        nt = len(model.coeffs)
        modes = np.array(model.modes, dtype=np.int32).reshape(nt, dim)
        camp = np.zeros(2 * nt)
        for k, c in enumerate(model.coeffs):
            eff = complex(c)
            for j in range(dim):
                eff *= float(model._norms[k][j])
            camp[2 * k] = eff.real
            camp[2 * k + 1] = eff.imag
        f = np.concatenate(
            [
                [float(model.hbar), float(model.norm_sq())],
                [float(m) for m in model.masses],
                [float(a) for a in model.alphas],
                [float(e) for e in model.energies],
                camp,
            ]
        )
        i = np.concatenate([[dim, nt], modes.ravel()]).astype(np.int32)
        return 3, f, i
    kind = getattr(model, "kernel_kind", None)
    if kind is not None:
        return kind, model.kernel_fparams(), np.zeros(0, dtype=np.int32)
    return None


def _integrate(model, q0, t0, t_end, cfg, with_dev=False, xi0=None, dt=None):
    bk = cfg.backend()
    dt = cfg.dt_sample if dt is None else dt
    sample_times = _sample_times(bk.real(t0), bk.real(t_end), bk.real(dt))
    if with_dev and xi0 is None:
        xi0 = [1.0] + [0.0] * (model.dims - 1)

    pack = None
    if cfg.use_compiled and _kernels is not None and bk.name == "hardware":
        pack = _kernel_pack(model)
    if pack is not None:
        kind, fpar, ipar = pack
        ts = np.array([float(t) for t in sample_times], dtype=float)
        qs, chis, stats = _kernels.integrate(
            int(kind), fpar, ipar,
            np.array([float(v) for v in q0], dtype=float),
            ts,
            float(cfg.rtol), float(cfg.atol), float(cfg.max_step),
            float(cfg.min_step), float(cfg.renorm_threshold),
            int(cfg.max_steps),
            1 if with_dev else 0,
            np.array([float(v) for v in (xi0 if xi0 is not None else [])],
                     dtype=float),
            float(bk.density_floor),
            1 if getattr(model, "log_density", None) is not None else 0,
        )
        path = TrajectoryPath(
            times=ts, points=qs, chi=(chis if with_dev else None),
            stats=stats, backend_name=bk.name,
        )
        return path

    runner = _PurePath(model, cfg, bk, with_dev, xi0 if with_dev else None)
    out_q, out_chi, stats = runner.run(q0, t0, t_end, sample_times)
    if bk.name == "hardware":
        times = np.array([float(t) for t in sample_times])
        points = np.array([[float(v) for v in q] for q in out_q])
        chi = np.array([float(c) for c in out_chi]) if with_dev else None
    else:
        times = sample_times
        points = out_q
        chi = out_chi
    return TrajectoryPath(times=times, points=points, chi=chi,
                          stats=stats, backend_name=bk.name)


def integrate_trajectory(model, q0, t0, t_end, cfg=None, dt=None):
    """Integrate one Bohmian (or classical) trajectory, sampling every dt."""
    cfg = cfg or IntegratorConfig()
    return _integrate(model, q0, t0, t_end, cfg, with_dev=False, dt=dt)


def integrate_with_deviation(model, q0, xi0, t0, t_end, cfg=None, dt=None):
    """Trajectory plus variational deviation; returns (path, LCNSeries).

    chi(t) = (1/(t-t0)) log(|xi(t)|/|xi0|); xi is renormalized whenever its
    norm passes the configured threshold and the accumulated log re-enters
    chi's numerator, so the reported series is scale-free.
    """
    cfg = cfg or IntegratorConfig()
    path = _integrate(model, q0, t0, t_end, cfg, with_dev=True, xi0=xi0, dt=dt)
    series = LCNSeries(times=path.times, chi=path.chi)
    return path, series


def classify_trajectory(series, slope_ordered=-0.8, slope_chaotic=-0.2,
                        chi_min=0.005, chi_floor=1e-8):
    """Label an LCN series ordered / chaotic / undetermined.

    Fits the slope of log|chi| against log t over the trailing decade
    [t_end/10, t_end].  Slope at or below `slope_ordered` means chi ~ 1/t
    (ordered); slope above `slope_chaotic` with trailing mean above
    `chi_min` means saturation (chaotic).  A trailing mean below `chi_floor`
    is chi = 0 to roundoff (isometric tangent flow, e.g. an unperturbed
    unit-frequency oscillator) and short-circuits to ordered: the slope fit
    would otherwise see only noise.
    """
    t = np.array([float(x) for x in series.times])
    chi = np.abs(np.array([float(c) for c in series.chi]))
    if len(t) < 3 or t[-1] <= 0:
        raise InsufficientSpanError("series too short to classify")
    pos = t > 0
    t, chi = t[pos], chi[pos]
    if t[-1] / t[0] < 100:
        raise InsufficientSpanError(
            f"need two decades of time, have {t[0]:.3g}..{t[-1]:.3g}"
        )
    tail = t >= t[-1] / 10
    tt, cc = t[tail], chi[tail]
    if float(cc.mean()) < chi_floor:
        series.slope = None
        series.trailing_mean = float(cc.mean())
        series.classification = "ordered"
        return series.classification
    good = cc > 0
    if good.sum() < 2:
        raise InsufficientSpanError("trailing decade has no usable chi values")
    slope = np.polyfit(np.log(tt[good]), np.log(cc[good]), 1)[0]
    mean = float(cc.mean())
    series.slope = float(slope)
    series.trailing_mean = mean
    if slope <= slope_ordered:
        series.classification = "ordered"
    elif slope > slope_chaotic and mean > chi_min:
        series.classification = "chaotic"
    else:
        series.classification = "undetermined"
    return series.classification


def detect_period(model, q0, t_candidate, cfg=None):
    """Integrate one candidate period and return |q(t0+T) - q0|."""
    cfg = cfg or IntegratorConfig()
    bk = cfg.backend()
    path = _integrate(model, q0, 0.0, t_candidate, cfg, dt=t_candidate)
    qT = path.final_point()
    return bk.hypot(*[bk.real(a) - bk.real(b) for a, b in zip(qT, q0)])


def rational_period(p, q, omega1=1.0):
    """T = 2 pi q / omega1 for omega2/omega1 = p/q in lowest terms."""
    fr = Fraction(p, q)
    return 2 * math.pi * fr.denominator / omega1
