import math

import numpy as np
import pytest

from bosonlab import lattice
from bosonlab.errors import InvalidArgumentError, UnsupportedSizeError
from bosonlab.exactdiag import total_number_operator
from bosonlab.hilbert import FockBasis, operator_norm
from bosonlab.model import (
    ModelParams,
    NormSettings,
    PotentialSpec,
    build_interaction,
    classical_energy,
    classical_ground_bruteforce,
    diagonal_energies,
    interaction_norm,
    reference_configuration,
    reference_energies,
    tail_weight,
)

HC = PotentialSpec(onsite=math.inf)


@pytest.fixture
def chain2():
    return lattice.build_box((2,), periodic=False)


def test_two_site_hopping_spectrum(chain2):
    basis = FockBasis(chain2, 1)
    _, H = build_interaction(chain2, basis, ModelParams(t=1.0), HC)
    assert np.allclose(np.linalg.eigvalsh(H.toarray()), [-1.0, 0.0, 0.0, 1.0])


def test_single_site_chemical_potential():
    box = lattice.build_box((1,), periodic=False)
    basis = FockBasis(box, 1)
    _, H = build_interaction(box, basis, ModelParams(mu=0.7), HC, families=("N",))
    assert np.allclose(np.diag(H.toarray()), [0.0, -0.7])


def test_gauge_breaking_term_alpha_zero():
    box = lattice.build_box((1,), periodic=False)
    basis = FockBasis(box, 1)
    _, H = build_interaction(box, basis, ModelParams(hq=1.0, alpha=0.0), HC,
                             families=("Q",))
    assert np.allclose(H.toarray(), [[0, 1], [1, 0]])


def test_infinite_onsite_requires_hardcore(chain2):
    with pytest.raises(InvalidArgumentError):
        build_interaction(chain2, None, ModelParams(), HC, nmax=2)


def test_h_is_hermitian_with_gauge_term():
    box = lattice.build_box((2, 2))
    basis = FockBasis(box, 1)
    params = ModelParams(t=0.5, mu=0.3, h=0.2, alpha=1.1, hq=0.4)
    pot = PotentialSpec(onsite=math.inf, u1=0.7, usqrt2=-0.2)
    _, H = build_interaction(box, basis, params, pot)
    assert H.hermiticity_defect() < 1e-12


def test_number_conservation_and_breaking():
    box = lattice.build_box((2, 2))
    basis = FockBasis(box, 1)
    nop = total_number_operator(basis).toarray()
    _, H0 = build_interaction(box, basis, ModelParams(t=0.6, mu=0.2), HC)
    comm = H0.toarray() @ nop - nop @ H0.toarray()
    assert np.max(np.abs(comm)) < 1e-10
    _, H1 = build_interaction(box, basis, ModelParams(t=0.6, hq=0.3, alpha=0.5), HC)
    comm1 = H1.toarray() @ nop - nop @ H1.toarray()
    assert np.max(np.abs(comm1)) > 1e-3


def test_star_norm_matches_hand_value():
    box = lattice.build_box((4, 4))
    spec, _ = build_interaction(box, None, ModelParams(t=0.1), HC, families=("T",))
    val = interaction_norm(spec, NormSettings(r=0.5, mode="star"), box)
    assert val == pytest.approx(4 * 0.1 * math.e, rel=1e-12)


def test_star_norm_without_couplings_is_zero():
    box = lattice.build_box((3, 3))
    spec, _ = build_interaction(box, None, ModelParams(t=0.0, mu=1.0), HC)
    assert interaction_norm(spec, NormSettings(r=1.0, mode="star"), box) == 0.0


def test_full_norm_single_site():
    box = lattice.build_box((1,), periodic=False)
    spec, _ = build_interaction(box, None, ModelParams(mu=0.8), HC, families=("N",))
    val = interaction_norm(spec, NormSettings(r=1.0, mode="full"), box)
    assert val == pytest.approx(0.8 * math.e)


def test_norm_monotonicity():
    box = lattice.build_box((3, 3))

    def norm(t, mu, r):
        spec, _ = build_interaction(box, None, ModelParams(t=t, mu=mu), HC)
        return interaction_norm(spec, NormSettings(r=r, mode="full"), box)

    assert norm(0.2, 0.1, 0.5) <= norm(0.4, 0.1, 0.5)
    assert norm(0.2, 0.1, 0.5) <= norm(0.2, 0.3, 0.5)
    assert norm(0.2, 0.1, 0.5) <= norm(0.2, 0.1, 1.0)


def test_diagonal_pair_span_is_three():
    # U(sqrt2) supports are disconnected two-site sets; the norm must weight
    # them with the connected-span size 3
    box = lattice.build_box((4, 4))
    pot = PotentialSpec(onsite=math.inf, usqrt2=-0.2)
    spec, _ = build_interaction(box, None, ModelParams(), pot, families=("V",))
    val = interaction_norm(spec, NormSettings(r=1.0, mode="star"), box)
    # each site belongs to 4 diagonal pairs of block norm 0.2
    assert val == pytest.approx(4 * 0.2 * math.exp(3.0))


def test_tail_weight_values():
    assert tail_weight(PotentialSpec(onsite=math.inf), 0.3, 2) == 0.0
    pot = PotentialSpec(onsite=math.inf, tail=((2.0, -0.1),), cutoff=2.0)
    assert tail_weight(pot, 0.5, 2) == pytest.approx(4 * 0.1 * math.exp(1.0))
    pot2 = PotentialSpec(onsite=math.inf, tail=((2.0, 0.05),), cutoff=2.0)
    assert tail_weight(pot2, 0.0, 2) == pytest.approx(4 * 0.05)


def test_classical_energy_examples():
    box = lattice.build_box((4, 4))
    pot = PotentialSpec(onsite=math.inf, u1=1.0, usqrt2=-0.25)
    empty = np.zeros(16, dtype=int)
    assert classical_energy(box, empty, 1.0, 0.0, pot) == 0.0
    full = reference_configuration(box, "full")
    assert classical_energy(box, full, 1.0, 0.0, pot) == pytest.approx(8.0)
    chess = reference_configuration(box, "chessboard_a")
    assert classical_energy(box, chess, 1.0, 0.0, pot) == pytest.approx(-12.0)


def test_classical_energy_matches_interaction_diagonal():
    # on a torus the square sum reproduces V - mu N - h P exactly
    box = lattice.build_box((4, 4))
    pot = PotentialSpec(onsite=math.inf, u1=0.9, usqrt2=-0.3, cutoff=1.5)
    params = ModelParams(mu=0.4, h=0.15)
    rng = np.random.default_rng(3)
    for _ in range(5):
        occ = rng.integers(0, 2, size=16)
        via_squares = classical_energy(box, occ, params.mu, params.h, pot)
        via_terms = diagonal_energies(box, pot, params, occ[None, :])[0]
        assert via_squares == pytest.approx(via_terms, abs=1e-12)


def test_classical_energy_rejects_1d():
    box = lattice.build_box((5,))
    with pytest.raises(UnsupportedSizeError):
        classical_energy(box, np.zeros(5, dtype=int), 0.0, 0.0, HC)


def test_reference_energies_example():
    ref = reference_energies(1.0, 0.0, 1.0, -0.25)
    assert ref.values["empty"] == 0.0
    assert ref.values["chessboard_a"] == pytest.approx(-0.75)
    assert ref.values["chessboard_b"] == pytest.approx(-0.75)
    assert ref.values["full"] == pytest.approx(0.5)
    assert set(ref.argmin) == {"chessboard_a", "chessboard_b"}


def test_reference_energies_field_split_and_extremes():
    ref = reference_energies(1.0, 0.2, 1.0, -0.25)
    assert ref.values["chessboard_a"] < ref.values["chessboard_b"]
    assert ref.argmin == ("chessboard_a",)
    assert reference_energies(-50.0, 0.0, 1.0, -0.25).argmin == ("empty",)
    assert reference_energies(50.0, 0.0, 1.0, -0.25).argmin == ("full",)


def test_bruteforce_ground_states():
    box = lattice.build_box((4, 4))
    pot = PotentialSpec(onsite=math.inf, u1=1.0, usqrt2=-0.25)
    emin, configs = classical_ground_bruteforce(box, 1.0, 0.1, pot)
    assert len(configs) == 1
    assert np.array_equal(configs[0], reference_configuration(box, "chessboard_a"))
    emin_full, configs_full = classical_ground_bruteforce(box, 50.0, 0.0, pot)
    assert np.array_equal(configs_full[0], reference_configuration(box, "full"))
    _, configs_empty = classical_ground_bruteforce(box, -50.0, 0.0, pot)
    assert np.array_equal(configs_empty[0], reference_configuration(box, "empty"))


def test_bruteforce_size_guard():
    box = lattice.build_box((5, 5))
    with pytest.raises(UnsupportedSizeError):
        classical_ground_bruteforce(box, 0.0, 0.0, HC)
