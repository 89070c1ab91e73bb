import pytest

from currentlab import Hypersurface, build_foliation

from helpers import SCENARIOS, TWO_PI, make_packet


@pytest.fixture(scope="session")
def scenario_packets():
    return {name: make_packet(modes)
            for name, (modes, _, _) in SCENARIOS.items()}


@pytest.fixture(scope="session")
def scenario_foliations(scenario_packets):
    """8-leaf advected foliations for the three one-particle scenarios."""
    out = {}
    for name, (_, seed_t, ds) in SCENARIOS.items():
        packet = scenario_packets[name]
        seed = Hypersurface.t_const(seed_t, TWO_PI, 64)
        out[name] = build_foliation(packet, seed, n_leaves=8, ds=ds,
                                    congruence_size=32)
    return out
