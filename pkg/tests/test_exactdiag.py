import math

import numpy as np
import pytest
import scipy.linalg

from bosonlab import lattice
from bosonlab.errors import InvalidArgumentError
from bosonlab.exactdiag import (
    density_and_compressibility,
    gibbs_expectation,
    odlro_correlator,
    odlro_matrix,
    sector_spectra,
    sector_thermodynamics,
    spectrum,
    spin_xy_equivalence,
    symmetry_residual,
    thermodynamics,
    total_number_operator,
)
from bosonlab.hilbert import FockBasis, OperatorMatrix, gauge_unitary, translation_unitary
from bosonlab.model import ModelParams, PotentialSpec, build_interaction

HC = PotentialSpec(onsite=math.inf)


def _model(dims, periodic, params, pot=HC, nmax=1, families=("T", "V", "N", "P", "Q")):
    box = lattice.build_box(dims, periodic)
    basis = FockBasis(box, nmax)
    _, H = build_interaction(box, basis, params, pot, families=families)
    return box, basis, H


def test_single_site_thermodynamics():
    box, basis, H = _model((1,), False, ModelParams(mu=0.0))
    th = thermodynamics(H, 1.0, box)
    assert th.Z == pytest.approx(2.0)
    assert th.f == pytest.approx(-math.log(2.0))


def test_two_site_partition_function():
    box, basis, H = _model((2,), False, ModelParams(t=1.0))
    th = thermodynamics(H, 1.0, box)
    assert th.Z == pytest.approx(2 + math.e + 1 / math.e, rel=1e-12)


def test_low_temperature_free_energy_approaches_ground_state():
    box, basis, H = _model((2,), False, ModelParams(t=1.0))
    gap = 1.0  # spectrum is {-1, 0, 0, 1}
    for beta in (10.0, 20.0):
        f = thermodynamics(H, beta, box).f
        assert abs(f - (-1.0 / 2)) < math.exp(-beta * gap)


def test_z_matches_expm_trace():
    box, basis, H = _model((2, 2), True, ModelParams(t=0.7, mu=0.3),
                           PotentialSpec(onsite=math.inf, u1=0.5))
    beta = 1.3
    z_direct = float(np.trace(scipy.linalg.expm(-beta * H.toarray())).real)
    assert thermodynamics(H, beta, box).Z == pytest.approx(z_direct, rel=1e-9)


def test_gibbs_expectation_examples():
    box, basis, H = _model((1,), False, ModelParams(mu=0.0))
    nop = total_number_operator(basis)
    assert gibbs_expectation(H, 2.7, nop, basis) == pytest.approx(0.5)

    # <H>/|box| equals -d(log Z)/d beta / |box| by finite differences
    box2, basis2, H2 = _model((2,), False, ModelParams(t=0.9, mu=0.2))
    beta = 1.1
    e_density = gibbs_expectation(H2, beta, H2, basis2)
    db = 1e-5
    lz = lambda b: math.log(thermodynamics(H2, b, box2).Z)
    fd = -(lz(beta + db) - lz(beta - db)) / (2 * db) / box2.nsites
    assert e_density == pytest.approx(fd, abs=1e-6)


def test_staggered_expectation_in_ordered_phase():
    box = lattice.build_box((2, 2))
    basis = FockBasis(box, 1)
    pot = PotentialSpec(onsite=math.inf, u1=1.0)
    # the competing chessboard sits 2h higher; pick h with beta * 2h >> 1
    params = ModelParams(mu=1.0, h=0.3)
    _, H = build_interaction(box, basis, params, pot, families=("V", "N", "P"))
    pspec, _ = build_interaction(box, basis, ModelParams(h=-1.0), HC, families=("P",))
    # -1.0 factor gives +sum (-1)^x n_x; chessboard_a has value +1/2 per site
    val = gibbs_expectation(H, 40.0, pspec, basis)
    assert val == pytest.approx(0.5, abs=1e-6)


def test_odlro_two_site_value():
    box, basis, H = _model((2,), False, ModelParams(t=1.0))
    z = 2 + math.e + 1 / math.e
    val = odlro_correlator(H, 1.0, (0,), (1,), basis)
    assert val.real == pytest.approx(math.sinh(1.0) / z, rel=1e-12)
    assert val.imag == pytest.approx(0.0, abs=1e-12)


def test_odlro_vanishes_for_diagonal_model():
    box, basis, H = _model((2, 2), True, ModelParams(mu=0.4),
                           PotentialSpec(onsite=math.inf, u1=1.0), families=("V", "N"))
    val = odlro_correlator(H, 2.0, (0, 0), (1, 0), basis)
    assert abs(val) < 1e-14


def test_odlro_hermiticity_and_psd():
    box, basis, H = _model((2, 2), True, ModelParams(t=0.8, mu=0.1))
    corr_xy = odlro_correlator(H, 1.5, (0, 0), (1, 0), basis)
    corr_yx = odlro_correlator(H, 1.5, (1, 0), (0, 0), basis)
    assert corr_xy == pytest.approx(corr_yx.conjugate())
    mat = odlro_matrix(H, 1.5, basis)
    assert np.max(np.abs(mat - mat.conj().T)) < 1e-12
    assert np.linalg.eigvalsh(mat).min() > -1e-10


def test_density_and_compressibility_single_site():
    box = lattice.build_box((1,), periodic=False)
    basis = FockBasis(box, 1)
    rho, kappa = density_and_compressibility(box, basis, ModelParams(), HC,
                                             beta=1.0, mu=0.0)
    assert rho == pytest.approx(0.5)
    assert kappa == pytest.approx(0.25, abs=1e-6)  # beta/4 logistic slope


def test_density_saturates():
    box = lattice.build_box((2,), periodic=False)
    basis = FockBasis(box, 1)
    rho, kappa = density_and_compressibility(box, basis, ModelParams(t=0.2), HC,
                                             beta=4.0, mu=30.0)
    assert rho == pytest.approx(1.0, abs=1e-8)
    assert abs(kappa) < 1e-6


def test_density_equals_minus_df_dmu():
    box = lattice.build_box((2, 2))
    basis = FockBasis(box, 1)
    pot = PotentialSpec(onsite=math.inf, u1=0.6)
    beta, mu = 1.4, 0.25

    def f_at(m):
        _, H = build_interaction(box, basis, ModelParams(t=0.5, mu=m), pot)
        return thermodynamics(H, beta, box).f

    rho, _ = density_and_compressibility(box, basis, ModelParams(t=0.5), pot, beta, mu)
    dm = 1e-5
    assert rho == pytest.approx(-(f_at(mu + dm) - f_at(mu - dm)) / (2 * dm), abs=1e-6)


def test_free_energy_concave_in_mu():
    box = lattice.build_box((2, 2))
    basis = FockBasis(box, 1)
    pot = PotentialSpec(onsite=math.inf, u1=1.0)
    mus = np.linspace(-1.0, 3.0, 21)
    fs = []
    for m in mus:
        _, H = build_interaction(box, basis, ModelParams(t=0.3, mu=m), pot)
        fs.append(thermodynamics(H, 2.0, box).f)
    minus_f = -np.array(fs)
    second = minus_f[2:] - 2 * minus_f[1:-1] + minus_f[:-2]
    assert second.min() >= -1e-8


def test_translation_symmetry_residual():
    box = lattice.build_box((4,))
    basis = FockBasis(box, 1)
    _, H = build_interaction(box, basis, ModelParams(t=0.8, mu=0.3),
                             PotentialSpec(onsite=math.inf, u1=0.4))
    u = translation_unitary(basis, axis=0)
    assert symmetry_residual(H, u) < 1e-10


def test_gauge_symmetry_residual():
    box = lattice.build_box((2, 2))
    basis = FockBasis(box, 1)
    _, H0 = build_interaction(box, basis, ModelParams(t=0.5, mu=0.2), HC)
    u = gauge_unitary(basis, 0.9)
    assert symmetry_residual(H0, u) < 1e-10
    _, H1 = build_interaction(box, basis,
                              ModelParams(t=0.5, mu=0.2, hq=0.1, alpha=math.pi / 2), HC)
    res = symmetry_residual(H1, u)
    assert res > 1e-3
    # the residual is exactly hq * || sum_x (phase-shifted Q - Q) ||
    _, q_shift = build_interaction(box, basis,
                                   ModelParams(hq=0.1, alpha=(math.pi / 2 + 0.9) % (2 * math.pi)),
                                   HC, families=("Q",))
    _, q_orig = build_interaction(box, basis,
                                  ModelParams(hq=0.1, alpha=math.pi / 2), HC, families=("Q",))
    from bosonlab.hilbert import operator_norm

    expected = operator_norm(q_shift - q_orig)
    assert res == pytest.approx(expected, rel=1e-10)


def test_symmetry_residual_rejects_nonunitary():
    box = lattice.build_box((2,), periodic=False)
    basis = FockBasis(box, 1)
    _, H = build_interaction(box, basis, ModelParams(t=1.0), HC)
    bad = OperatorMatrix(np.diag([1.0, 1.0, 1.0, 2.0]))
    with pytest.raises(InvalidArgumentError):
        symmetry_residual(H, bad)


def test_spin_xy_equivalence():
    assert spin_xy_equivalence(lattice.build_box((2,), periodic=False)) < 1e-10
    assert spin_xy_equivalence(lattice.build_box((2, 2))) < 1e-10
    assert spin_xy_equivalence(lattice.build_box((2,), periodic=False),
                               coefficient=1.0) > 0.1


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (1, 4), (4,)])
def test_sector_spectra_match_dense(dims):
    box = lattice.build_box(dims)
    basis = FockBasis(box, 1)
    params = ModelParams(t=0.41, mu=0.17)
    pot = PotentialSpec(onsite=math.inf, u1=0.35, usqrt2=-0.1)
    _, H = build_interaction(box, basis, params, pot)
    dense = np.sort(spectrum(H).eigenvalues)
    blocks = sector_spectra(box, params, pot)
    stitched = np.sort(np.concatenate(list(blocks.values())))
    assert len(stitched) == len(dense)
    assert np.max(np.abs(dense - stitched)) < 1e-10
    th_dense = thermodynamics(H, 0.9, box)
    th_sym = sector_thermodynamics(box, params, pot, 0.9)
    assert th_sym.Z == pytest.approx(th_dense.Z, rel=1e-12)


def test_sector_path_requires_symmetry():
    box = lattice.build_box((2, 2))
    with pytest.raises(InvalidArgumentError):
        sector_spectra(box, ModelParams(t=0.3, h=0.1), HC)
    with pytest.raises(InvalidArgumentError):
        sector_spectra(lattice.build_box((2, 2), periodic=False),
                       ModelParams(t=0.3), HC)
