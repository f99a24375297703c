"""Backend parity: the compiled kernels and the numpy twins must agree."""

import numpy as np
import pytest

from lrmvdr import kernels


def hpd(rng, n):
    b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = b @ b.conj().T + n * np.eye(n)
    return np.ascontiguousarray(a)


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    return kernels.get_backend(request.param)


def test_sm_update_matches_reference(backend):
    rng = np.random.default_rng(0)
    for n in (1, 2, 5, 16):
        a = hpd(rng, n)
        ainv = np.ascontiguousarray(np.linalg.inv(a))
        ainv = 0.5 * (ainv + ainv.conj().T)
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x = np.ascontiguousarray(x)
        alpha = 0.93
        denom = backend.sm_update(ainv, x, alpha, 1e-12)
        expected_denom = alpha + (1 - alpha) * np.real(np.vdot(x, np.linalg.inv(a) @ x))
        assert denom == pytest.approx(expected_denom, rel=1e-10)
        ref = np.linalg.inv(alpha * a + (1 - alpha) * np.outer(x, x.conj()))
        assert np.linalg.norm(ainv - ref) / np.linalg.norm(ref) < 1e-10
        assert np.linalg.norm(ainv - ainv.conj().T) == 0.0


def test_sm_update_underflow_leaves_state(backend):
    ainv = np.eye(3, dtype=np.complex128)
    before = ainv.copy()
    # zero snapshot with a tiny alpha drives the denominator to alpha itself
    denom = backend.sm_update(ainv, np.zeros(3, dtype=np.complex128), 1e-13, 1e-12)
    assert denom <= 1e-12
    np.testing.assert_array_equal(ainv, before)


def test_rank_one_update(backend):
    rng = np.random.default_rng(1)
    r = hpd(rng, 4)
    x = np.ascontiguousarray(rng.standard_normal(4) + 1j * rng.standard_normal(4))
    expected = 0.97 * r + 0.03 * np.outer(x, x.conj())
    backend.rank_one_update(r, x, 0.97)
    np.testing.assert_allclose(r, expected, rtol=1e-12)


def test_project_conj(backend):
    rng = np.random.default_rng(2)
    u = np.ascontiguousarray(rng.standard_normal((8, 3)) + 1j * rng.standard_normal((8, 3)))
    x = np.ascontiguousarray(rng.standard_normal(8) + 1j * rng.standard_normal(8))
    np.testing.assert_allclose(backend.project_conj(u, x), u.conj().T @ x, rtol=1e-12)


def test_mvdr_numerator(backend):
    rng = np.random.default_rng(3)
    ainv = np.ascontiguousarray(np.linalg.inv(hpd(rng, 5)))
    a = np.ascontiguousarray(rng.standard_normal(5) + 1j * rng.standard_normal(5))
    num, denom = backend.mvdr_numerator(ainv, a)
    np.testing.assert_allclose(num, ainv @ a, rtol=1e-12)
    assert denom == pytest.approx(float(np.real(np.vdot(a, ainv @ a))), rel=1e-12)


def test_lowrank_numerator(backend):
    rng = np.random.default_rng(4)
    u = np.linalg.qr(rng.standard_normal((10, 4)) + 1j * rng.standard_normal((10, 4)))[0]
    u = np.ascontiguousarray(u)
    core = np.ascontiguousarray(np.linalg.inv(hpd(rng, 4)))
    a = np.ascontiguousarray(rng.standard_normal(10) + 1j * rng.standard_normal(10))
    num, denom = backend.lowrank_numerator(u, core, a)
    at = u.conj().T @ a
    np.testing.assert_allclose(num, u @ (core @ at), rtol=1e-12)
    assert denom == pytest.approx(float(np.real(np.vdot(at, core @ at))), rel=1e-12)


def test_backends_produce_identical_trajectories():
    # run the same update sequence through every available backend
    rng = np.random.default_rng(5)
    a = hpd(rng, 6)
    xs = rng.standard_normal((50, 6)) + 1j * rng.standard_normal((50, 6))
    results = {}
    for name in kernels.available_backends():
        mod = kernels.get_backend(name)
        ainv = np.ascontiguousarray(np.linalg.inv(a))
        ainv = 0.5 * (ainv + ainv.conj().T)
        for x in xs:
            mod.sm_update(ainv, np.ascontiguousarray(x), 0.99, 1e-12)
        results[name] = ainv
    values = list(results.values())
    for other in values[1:]:
        assert np.linalg.norm(other - values[0]) / np.linalg.norm(values[0]) < 1e-12
