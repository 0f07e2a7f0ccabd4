"""Compiled extension kernels against the pure-Python integration path.

Both paths implement the same stepping logic, so over short spans they must
take identical accepted-step sequences and agree to roundoff accumulation.
"""

import numpy as np
import pytest

from bohmsim import presets, uses_compiled_kernels
from bohmsim.dynamics import IntegratorConfig, integrate_with_deviation

needs_kernels = pytest.mark.skipif(
    not uses_compiled_kernels, reason="compiled kernels not built")

CASES = [
    ("system_a", presets.system_a, (-1.0, -1.0)),
    ("qubit", presets.qubit, (2.0, -2.0)),
    ("pear_3d", presets.pear_3d, presets.PEAR_ICS["surface"]),
    ("classical", presets.classical_driven, presets.CLASSICAL_IC),
]


@needs_kernels
@pytest.mark.parametrize("name,factory,ic", CASES, ids=[c[0] for c in CASES])
def test_compiled_matches_pure(name, factory, ic):
    m = factory()
    pc, sc = integrate_with_deviation(
        m, ic, None, 0.0, 20.0, IntegratorConfig(use_compiled=True), dt=0.5)
    pp, sp = integrate_with_deviation(
        m, ic, None, 0.0, 20.0, IntegratorConfig(use_compiled=False), dt=0.5)
    assert pc.stats["steps"] == pp.stats["steps"]
    dq = np.max(np.abs(np.asarray(pc.points) - np.asarray(pp.points)))
    assert dq < 1e-11
    dchi = np.max(np.abs(np.asarray(sc.chi[1:]) - np.asarray(sp.chi[1:])))
    assert dchi < 1e-10


@needs_kernels
def test_pure_path_forced_by_flag(system_a):
    # same external interface either way; only wall time differs
    path = integrate_with_deviation(
        system_a, (0.75, 0.25), None, 0.0, 5.0,
        IntegratorConfig(use_compiled=False), dt=1.0)[0]
    assert path.backend_name == "hardware"
    assert len(path.points) == 6


@needs_kernels
def test_extended_precision_never_uses_kernels(system_a):
    # the compiled path is doubles-only; digits > 16 must fall back
    path = integrate_with_deviation(
        system_a, (0.75, 0.25), None, 0.0, 2.0,
        IntegratorConfig(digits=20), dt=1.0)[0]
    assert path.backend_name == "extended"
