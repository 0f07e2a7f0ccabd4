"""JSON run configuration: parsing, validation, model construction.

A config file holds one model plus integrator and run settings:

    {"model": {"family": "system_a", "c1": "1/sqrt(2)", "c2": 0.5},
     "integrator": {"rtol": 1e-10, "atol": 1e-10},
     "run": {"seed": 7, "workers": 4}}

Scalar fields accept plain numbers or small closed-form expressions
("sqrt(2)/2", "629/676", "pi/4") so configs can state exact symbolic
values instead of rounded decimals.
"""

import ast
import json
import math
import operator

from .errors import ConfigError

_ALLOWED_FUNCS = {
    "sqrt": math.sqrt, "sin": math.sin, "cos": math.cos,
    "exp": math.exp, "log": math.log,
}
_ALLOWED_NAMES = {"pi": math.pi, "e": math.e}
_BINOPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow,
}


def parse_scalar(value, where="value"):
    """Number, or a string expression over +-*/**, sqrt/sin/cos/exp/log, pi, e."""
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a number or expression string")
    try:
        tree = ast.parse(value, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"{where}: cannot parse {value!r} ({exc.msg})") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in _ALLOWED_NAMES:
                return _ALLOWED_NAMES[node.id]
            raise ConfigError(f"{where}: unknown name {node.id!r} in {value!r}")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            fn = _ALLOWED_FUNCS.get(node.func.id)
            if fn is None or node.keywords:
                raise ConfigError(
                    f"{where}: function {node.func.id!r} not allowed in {value!r}"
                )
            return fn(*[ev(a) for a in node.args])
        raise ConfigError(f"{where}: unsupported syntax in {value!r}")

    return ev(tree)


MODEL_FAMILIES = ("system_a", "qubit", "superposition", "classical")


def _scalar(section, key, default=None, where=""):
    if key not in section:
        if default is None:
            raise ConfigError(f"{where}.{key}: required field missing")
        return float(default)
    return parse_scalar(section[key], where=f"{where}.{key}")


def build_model(model_cfg, backend=None):
    """Model instance from the `model` section of a config."""
    from . import presets
    from .classical import ClassicalOscillator, DrivenOscillatorSpec
    from .wavefunctions import (
        OscillatorSpec,
        QubitModel,
        QubitSpec,
        SuperpositionModel,
        SuperpositionSpec,
        SystemAModel,
    )

    if not isinstance(model_cfg, dict):
        raise ConfigError("model: expected an object with a `family` field")
    preset = model_cfg.get("preset")
    if preset is not None:
        extra = {k: parse_scalar(v, where=f"model.{k}")
                 for k, v in model_cfg.items() if k != "preset"}
        return presets.get_model(preset, **extra)
    family = model_cfg.get("family")
    if family not in MODEL_FAMILIES:
        raise ConfigError(
            f"model.family: got {family!r}, expected one of {MODEL_FAMILIES} "
            "(or use `preset`)"
        )
    if family == "system_a":
        return SystemAModel(
            c1=_scalar(model_cfg, "c1", 1 / math.sqrt(2), "model"),
            c2=_scalar(model_cfg, "c2", 0.5, "model"),
            omega2=_scalar(model_cfg, "omega2", 1 / math.sqrt(2), "model"),
            omega1=_scalar(model_cfg, "omega1", 1.0, "model"),
            backend=backend,
        )
    if family == "qubit":
        c2 = _scalar(model_cfg, "c2", None, "model")
        if "c1" in model_cfg:
            c1 = _scalar(model_cfg, "c1", None, "model")
        else:
            if not -1.0 <= c2 <= 1.0:
                raise ConfigError(f"model.c2: {c2} has no partner with c1^2+c2^2=1")
            c1 = math.sqrt(1.0 - c2 * c2)
        spec = QubitSpec(
            c1=c1, c2=c2,
            a0=_scalar(model_cfg, "a0", 2.5, "model"),
            omega_x=_scalar(model_cfg, "omega_x", 1.0, "model"),
            omega_y=_scalar(model_cfg, "omega_y", math.sqrt(3), "model"),
            sigma_x=_scalar(model_cfg, "sigma_x", 0.0, "model"),
            sigma_y=_scalar(model_cfg, "sigma_y", 0.0, "model"),
        )
        return QubitModel(spec, backend=backend)
    if family == "superposition":
        terms_cfg = model_cfg.get("terms")
        if not terms_cfg:
            raise ConfigError(
                "model.terms: a superposition needs at least one [coefficient, "
                "[n1, n2, ...]] entry"
            )
        terms = []
        for i, entry in enumerate(terms_cfg):
            try:
                coeff_raw, mode = entry
            except (TypeError, ValueError):
                raise ConfigError(
                    f"model.terms[{i}]: expected [coefficient, mode-list]"
                ) from None
            coeff = parse_scalar(coeff_raw, where=f"model.terms[{i}].coefficient")
            terms.append((coeff, tuple(int(n) for n in mode)))
        omegas_cfg = model_cfg.get("omegas")
        if not omegas_cfg:
            raise ConfigError("model.omegas: required for superposition models")
        omegas = tuple(
            parse_scalar(w, where=f"model.omegas[{i}]")
            for i, w in enumerate(omegas_cfg)
        )
        osc = OscillatorSpec(omegas=omegas)
        return SuperpositionModel(SuperpositionSpec(terms=terms, oscillator=osc),
                                  backend=backend)
    spec = DrivenOscillatorSpec(
        eps=_scalar(model_cfg, "eps", 3.0, "model"),
        omega=_scalar(model_cfg, "omega", (math.sqrt(5) - 1) / 2, "model"),
        sigma=_scalar(model_cfg, "sigma", 1.0, "model"),
    )
    return ClassicalOscillator(spec, backend=backend)


def build_integrator_config(int_cfg, precision=None):
    from .dynamics import IntegratorConfig

    int_cfg = dict(int_cfg or {})
    kwargs = {}
    for key in ("rtol", "atol", "max_step", "min_step", "renorm_threshold",
                "dt_sample"):
        if key in int_cfg:
            kwargs[key] = parse_scalar(int_cfg.pop(key), where=f"integrator.{key}")
    if "max_steps" in int_cfg:
        kwargs["max_steps"] = int(int_cfg.pop("max_steps"))
    digits = int_cfg.pop("digits", None)
    if precision is not None:
        digits = precision
    if digits is not None:
        kwargs["digits"] = int(digits)
    if int_cfg:
        raise ConfigError(f"integrator: unknown fields {sorted(int_cfg)}")
    return IntegratorConfig(**kwargs)


def load_config(fname):
    try:
        with open(fname) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {fname}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{fname}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{fname}: top level must be an object")
    unknown = set(cfg) - {"model", "integrator", "run"}
    if unknown:
        raise ConfigError(
            f"{fname}: unknown sections {sorted(unknown)} "
            "(expected model / integrator / run)"
        )
    return cfg
