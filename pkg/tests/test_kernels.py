import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaplygin import (
    ChaplyginEos,
    IntegrationConfig,
    _backend,
    _purepy,
    exponents_for,
    integrate,
)
from chaplygin.integrator import FixedEuler, _params
from chaplygin.reduction import MomentumForm

compiled = _backend.AVAILABLE.get("compiled")
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled backend not built")

PARAMS = _params(exponents_for("I", 0.5), ChaplyginEos(2.0, 0.5), MomentumForm.AS_PRINTED)


def test_unknown_backend():
    with pytest.raises(ImportError):
        _backend.get("fortran")


def test_default_backend_prefers_compiled():
    expected = "compiled" if compiled is not None else "python"
    assert _backend.get().NAME == expected
    assert _backend.get("python") is _purepy


def test_rhs_nan_for_nonpositive_density(backend):
    kern = _backend.get(backend)
    assert all(np.isnan(kern.rhs(1.0, 0.0, 0.0, 0.0, PARAMS)))


@needs_compiled
@given(eta=st.floats(0.1, 10), f=st.floats(-3, 3), g=st.floats(1e-3, 10),
       q=st.floats(-10, 10), form=st.sampled_from([0, 1]))
def test_rhs_parity(eta, f, g, q, form):
    params = PARAMS[:5] + (form,)
    a = _purepy.rhs(eta, f, g, q, params)
    b = compiled.rhs(eta, f, g, q, params)
    assert np.array_equal(np.array(a), np.array(b), equal_nan=True)


@needs_compiled
@given(eta=st.floats(0.1, 5), f=st.floats(-1, 1), g=st.floats(0.1, 5),
       h=st.floats(1e-4, 1e-1))
def test_dp45_step_parity(eta, f, g, h):
    fp, gp, qp, _ = _purepy.rhs(eta, f, g, 0.0, PARAMS)
    y, k1 = (f, g, 0.0, 0.0), (fp, gp, 0.0, qp)
    a = _purepy.dp45_step(eta, y, h, k1, PARAMS)
    b = compiled.dp45_step(eta, y, h, k1, PARAMS)
    for u, v in zip(a, b):
        assert np.array_equal(np.asarray(u, dtype=float), np.asarray(v, dtype=float),
                              equal_nan=True)


@needs_compiled
def test_euler_march_parity():
    args = (0.5, (0.2, 1.0, 0.0, 0.0), 1e-3, 0.9, PARAMS, 1e-10, 1e-12, 10_000)
    a, b = _purepy.euler_march(*args), compiled.euler_march(*args)
    assert a[2] == b[2]
    assert np.asarray(a[0]).tobytes() == np.asarray(b[0]).tobytes()
    assert np.asarray(a[1]).tobytes() == np.asarray(b[1]).tobytes()


@needs_compiled
@pytest.mark.parametrize("mode", [None, FixedEuler(1e-4)])
@settings(deadline=None, max_examples=5)
@given(n=st.floats(-0.5, 1.0), A=st.floats(0.5, 50))
def test_integrate_parity(mode, n, A):
    exp, eos = exponents_for("III", n), ChaplyginEos(A, n)
    kw = {} if mode is None else {"mode": mode}
    cfg = IntegrationConfig(eta_end=1.0, **kw)
    a = integrate(cfg, exp, eos, backend="python")
    b = integrate(cfg, exp, eos, backend="compiled")
    assert a.same_as(b)
    assert (a.stats["backend"], b.stats["backend"]) == ("python", "compiled")
