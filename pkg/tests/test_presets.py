import pytest

from sgfio import presets as P
from sgfio.phases import phase_probe
from sgfio.verify import jet_fd_check
from sgfio.weights import default_probes, random_probes


def test_listing_covers_tables():
    lst = P.listing()
    assert set(lst["symbols"]) == set(P.SYMBOLS)
    assert set(lst["phases"]) == set(P.PHASES)
    assert set(lst["weights"]) == set(P.WEIGHTS)


def test_unknown_name_suggests():
    with pytest.raises(P.PresetError) as info:
        P.make_phase("identty")
    assert "identity" in info.value.suggestions
    assert "did you mean identity" in str(info.value)


@pytest.mark.parametrize("name", ["identity", "transport", "perturbed"])
def test_admissible_phases_are_regular(name):
    rep = phase_probe(P.make_phase(name), default_probes(1))
    assert rep.simple and rep.regular


@pytest.mark.parametrize("name", sorted(P.SYMBOLS))
def test_symbol_jets_first_points(name):
    pr = random_probes(1, 3, seed=5, scale=10)
    chk = jet_fd_check(P.make_symbol(name), pr.x, pr.xi, K=3)
    assert chk.passed, chk.to_dict()


@pytest.mark.parametrize("dim", [1, 2])
def test_dimension_propagates(dim):
    assert P.make_symbol("sg00", dim).dim == dim
    assert P.make_phase("perturbed", dim, eps=0.2).dim == dim
    assert P.make_weight("theta", dim, m=1, mu=0).dim == dim
