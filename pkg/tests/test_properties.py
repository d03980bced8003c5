"""Property-based checks of symmetries the closure must respect."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from dnlsq.core import SystemParams
from dnlsq.entanglement import (
    covariance,
    log_negativity,
    negativity_from_covariance,
    symplectic_eigenvalues,
)
from dnlsq.moments import MomentState, propagate
from dnlsq.validity import closure_rhs

amp = st.floats(-2.0, 2.0, allow_nan=False)
fields = st.lists(st.tuples(amp, amp), min_size=3, max_size=5).map(
    lambda xs: np.array([complex(a, b) for a, b in xs]))


def _run(alpha, L=0.05, z=0.2):
    zero = np.zeros((len(alpha), len(alpha)), dtype=complex)
    p = SystemParams(n_sites=len(alpha), quantum_scale=L, z_max=z, step=2e-3)
    return propagate(MomentState(0.0, alpha, zero, zero.copy(), L), p,
                     output_stride=100).states[-1]


@settings(max_examples=15, deadline=None)
@given(fields, st.floats(0.0, 2 * np.pi))
def test_global_phase_equivariance(alpha, phi):
    u = np.exp(1j * phi)
    a, b = _run(alpha), _run(alpha * u)
    np.testing.assert_allclose(b.alpha, u * a.alpha, atol=1e-10)
    np.testing.assert_allclose(b.delta_n, a.delta_n, atol=1e-10)
    np.testing.assert_allclose(b.delta_a, u * u * a.delta_a, atol=1e-10)
    assert abs(log_negativity(a, 0, 1) - log_negativity(b, 0, 1)) < 1e-8


@settings(max_examples=15, deadline=None)
@given(fields)
def test_reflection_symmetry(alpha):
    a, b = _run(alpha), _run(alpha[::-1].copy())
    np.testing.assert_allclose(b.alpha, a.alpha[::-1], atol=1e-10)
    np.testing.assert_allclose(b.delta_a, a.delta_a[::-1, ::-1], atol=1e-10)


@settings(max_examples=15, deadline=None)
@given(fields)
def test_negativity_nonnegative_and_pair_symmetric(alpha):
    s = _run(alpha)
    n = s.n_sites
    for k in range(n):
        for l in range(k + 1, n):
            e = log_negativity(s, k, l, check=False)
            assert e >= 0.0
            assert abs(e - log_negativity(s, l, k, check=False)) < 1e-10


@settings(max_examples=15, deadline=None)
@given(fields)
def test_evolved_states_are_physical(alpha):
    s = _run(alpha, L=0.02)
    assert covariance(s, 0, 1, check=False).is_physical()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=16, max_size=16),
       st.floats(0.0, 2 * np.pi), st.floats(0.0, 2 * np.pi))
def test_negativity_local_rotation_invariance(entries, t1, t2):
    m = np.array(entries).reshape(4, 4)
    sigma = m @ m.T + 0.5 * np.eye(4)

    def rot(t):
        return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])

    r = np.block([[rot(t1), np.zeros((2, 2))], [np.zeros((2, 2)), rot(t2)]])
    s2 = r @ sigma @ r.T
    assert abs(negativity_from_covariance(sigma) - negativity_from_covariance(s2)) < 1e-9
    np.testing.assert_allclose(symplectic_eigenvalues(sigma), symplectic_eigenvalues(s2),
                               rtol=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 2 * np.pi))
def test_closure_rhs_phase_covariance(seed, phi):
    rng = np.random.default_rng(seed)
    n = 3

    def c(*s):
        return rng.normal(size=s) + 1j * rng.normal(size=s)

    a, dn, da, ka, kn = c(n), c(n, n), c(n, n), c(n, n, n), c(n, n, n)
    u = np.exp(1j * phi)
    base = closure_rhs(a, dn, da, ka, kn, 0.1)
    rot = closure_rhs(u * a, dn, u ** 2 * da, u ** 3 * ka, u * kn, 0.1)
    for b, r, w in zip(base, rot, (u, 1.0, u ** 2, u ** 3, u)):
        np.testing.assert_allclose(r, w * b, atol=1e-9)
