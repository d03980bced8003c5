import math

import numpy as np
import pytest

from dnlsq.core import SystemParams, integrate_classical
from dnlsq.errors import (
    ContinuationError,
    EdgeLeak,
    NoConvergence,
    UnsupportedOmega,
    WrongBranch,
)
from dnlsq.soliton import (
    FUNDAMENTAL,
    TWISTED,
    MultiTwisted,
    SolitonKind,
    SolitonProfile,
    check_kind,
    continuation,
    excited_block,
    find_soliton,
    linear_stability,
    residual,
    seed_profile,
    solve_soliton,
)

P = SystemParams(omega=10.0)


def test_kind_parsing():
    assert SolitonKind.parse("fundamental") is FUNDAMENTAL
    assert SolitonKind.parse("Twisted") is TWISTED
    assert SolitonKind.parse("multi_twisted(3)") == MultiTwisted(3)
    assert SolitonKind.parse("multi-twisted:2").sign_changes == 2
    assert MultiTwisted(4).name == "multi_twisted(4)"
    with pytest.raises(ValueError):
        SolitonKind.parse("multi_twisted(1)")
    with pytest.raises(ValueError):
        MultiTwisted(1)
    with pytest.raises(ValueError):
        SolitonKind.parse("bright")


def test_excited_blocks_are_centred():
    assert list(excited_block(23, FUNDAMENTAL)) == [11]
    assert list(excited_block(23, TWISTED)) == [10, 11]
    assert list(excited_block(23, MultiTwisted(2))) == [10, 11, 12]
    assert list(excited_block(23, MultiTwisted(3))) == [9, 10, 11, 12]


@pytest.mark.parametrize("kind", [FUNDAMENTAL, TWISTED, MultiTwisted(2), MultiTwisted(3)])
def test_solutions_converge(kind):
    prof = find_soliton(kind, P)
    assert np.max(np.abs(residual(prof.beta, 10.0))) <= 1e-12
    assert prof.residual <= 1e-12
    assert max(abs(prof.beta[0]), abs(prof.beta[-1])) <= 1e-8


def test_fundamental_amplitude_near_anticontinuum():
    prof = find_soliton(FUNDAMENTAL, P)
    c = prof.excited_sites()[0]
    assert abs(prof.beta[c] - math.sqrt(10.0)) < 0.1
    # symmetric about the centre
    np.testing.assert_allclose(prof.beta, prof.beta[::-1], atol=1e-12)


def test_twisted_is_antisymmetric():
    prof = find_soliton(TWISTED, P.with_(n_sites=20))
    np.testing.assert_allclose(prof.beta, -prof.beta[::-1], atol=1e-12)
    k, l = prof.central_pair()
    assert prof.beta[k] > 0 > prof.beta[l]


def test_stationary_phase_rotation():
    prof = find_soliton(TWISTED, P)
    a = integrate_classical(prof.beta.astype(complex), z_max=1.0, step=1e-4)
    assert np.max(np.abs(a - prof.beta * np.exp(10j))) <= 1e-9


def test_unsupported_omega():
    with pytest.raises(UnsupportedOmega):
        find_soliton(FUNDAMENTAL, P.with_(omega=1.5))
    with pytest.raises(UnsupportedOmega):
        find_soliton(FUNDAMENTAL, P.with_(omega=2.0))


def test_small_array_leaks_at_edges():
    # 15 sites are too few at omega = 10 for the 1e-8 edge bound
    with pytest.raises(EdgeLeak):
        find_soliton(FUNDAMENTAL, P.with_(n_sites=15))


def test_wrong_branch_detection():
    beta = find_soliton(TWISTED, P).beta
    with pytest.raises(WrongBranch):
        check_kind(beta, FUNDAMENTAL)
    with pytest.raises(WrongBranch):
        check_kind(np.zeros(5), FUNDAMENTAL)
    # a seed whose Newton iterate lands on the twisted branch
    bad = SolitonProfile(beta, 10.0, FUNDAMENTAL, 0.0)
    with pytest.raises(WrongBranch):
        solve_soliton(bad, P)


def test_non_finite_seed():
    seed = seed_profile(FUNDAMENTAL, P)
    bad = SolitonProfile(np.full_like(seed.beta, np.nan), 10.0, FUNDAMENTAL, 0.0)
    with pytest.raises(NoConvergence):
        solve_soliton(bad, P)


def test_stability():
    for kind in (FUNDAMENTAL, TWISTED):
        rep = linear_stability(find_soliton(kind, P))
        assert rep.stable
        assert rep.max_growth_rate <= 1e-8
        # phase invariance gives a zero-mode pair
        assert rep.zero_modes == 2
    rep = linear_stability(find_soliton(MultiTwisted(2), P))
    assert not rep.stable and rep.max_growth_rate > 0.05
    assert linear_stability(find_soliton(MultiTwisted(2), P.with_(omega=15.0))).stable


def test_continuation_tracks_branch():
    profs = continuation(TWISTED, 10.0, 12.0, 4, P)
    assert [p.omega for p in profs] == pytest.approx([10.0, 10.5, 11.0, 11.5, 12.0])
    assert all(p.kind == TWISTED for p in profs)


def test_continuation_failure_carries_partial_results():
    with pytest.raises(ContinuationError) as info:
        continuation(FUNDAMENTAL, 10.0, 4.0, 3, P)
    err = info.value
    # omega = 4 decays too slowly for 23 sites
    assert err.omega == pytest.approx(4.0)
    assert isinstance(err.cause, EdgeLeak)
    assert [p.omega for p in err.profiles] == pytest.approx([10.0, 8.0, 6.0])
    with pytest.raises(UnsupportedOmega):
        continuation(FUNDAMENTAL, 10.0, 1.0, 3, P)


def test_profile_serialisation():
    prof = find_soliton(TWISTED, P)
    d = prof.to_dict(linear_stability(prof))
    assert d["kind"] == "twisted" and d["stable"] is True
    assert len(prof.to_csv_rows()) == 23 and prof.to_csv_rows()[0][0] == 1
    assert '"omega": 10.0' in prof.to_json()


def test_seed_examples():
    p15 = SystemParams(n_sites=15, omega=10.0)
    s = seed_profile(FUNDAMENTAL, p15)
    expected = np.zeros(15)
    expected[7] = math.sqrt(10.0)
    np.testing.assert_array_equal(s.beta, expected)
    t = seed_profile(TWISTED, p15)
    # sites 7 and 8 counted from one
    assert t.beta[6] == pytest.approx(math.sqrt(10.0))
    assert t.beta[7] == pytest.approx(-math.sqrt(10.0))
    assert np.count_nonzero(t.beta) == 2
    with pytest.raises(UnsupportedOmega):
        seed_profile(FUNDAMENTAL, p15.with_(omega=2.0))


@pytest.mark.parametrize("kind", [FUNDAMENTAL, TWISTED, MultiTwisted(3)])
def test_converged_profile_is_stationary(kind):
    from dnlsq.core import dnls_rhs

    prof = find_soliton(kind, P)
    np.testing.assert_allclose(dnls_rhs(prof.beta), 10j * prof.beta, rtol=0, atol=1e-11)


def test_spectrum_hamiltonian_symmetry():
    for kind in (FUNDAMENTAL, MultiTwisted(2)):
        ev = linear_stability(find_soliton(kind, P)).eigenvalues
        mirror = -ev.conj()
        dist = np.abs(mirror[:, None] - ev[None, :]).min(axis=1)
        assert dist.max() < 1e-10


def test_continuation_examples():
    # omega = 4 decays slowly; 31 sites keep the edges below the bound
    profs = continuation(FUNDAMENTAL, 10.0, 4.0, 12, P.with_(n_sites=31))
    assert len(profs) == 13
    centre = np.array([p.beta[p.excited_sites()[0]] for p in profs])
    assert np.all(np.diff(centre) < 0)
    single = continuation(FUNDAMENTAL, 10.0, 10.0, 1, P)
    np.testing.assert_array_equal(single[0].beta, find_soliton(FUNDAMENTAL, P).beta)


def test_continuation_toward_band_edge():
    profs = continuation(FUNDAMENTAL, 10.0, 2.05, 80, P.with_(n_sites=201))
    assert max(p.residual for p in profs) <= 1e-12
    assert np.max(profs[-1].beta) < 0.5
