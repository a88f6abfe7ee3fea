import numpy as np
import pytest

from parkopt import ParkOpt
from parkopt.conf import settings
from parkopt.guard import bound_guard
from parkopt.model import HubParams, ParkConfig, load_park_config
from parkopt.scenario import SAMPLE_PARK, sample_scenario


@pytest.fixture(autouse=True)
def parkopt_application():
    settings.reset()
    settings.configure(PARKOPT_LOG_LEVEL="WARNING")
    ParkOpt.init_app(settings)
    bound_guard.reset()

    yield settings

    settings.reset()
    bound_guard.reset()


@pytest.fixture
def park():
    return load_park_config(SAMPLE_PARK)


@pytest.fixture
def day():
    return sample_scenario()


@pytest.fixture
def make_park():
    """
    Builds a small park; keyword arguments override the defaults.
    """

    def factory(n_hubs=1, n_users=1, hub=None, **overrides):
        options = dict(
            hubs=[hub or HubParams() for _ in range(n_hubs)],
            il_a=np.full(n_users, -100.0),
            il_b=np.ones(n_users),
            el_a=np.full((n_hubs, 0), -1.0),
            el_b=np.zeros((n_hubs, 0)),
            el_bound=np.zeros((n_hubs, 0)),
            el_energy=[],
            e_max=10.0 * n_hubs,
            g_max=50.0 * n_hubs,
            e_o_max=5.0 * n_hubs,
        )
        options.update(overrides)
        return ParkConfig.build(**options)

    return factory
