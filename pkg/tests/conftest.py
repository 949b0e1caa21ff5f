import pytest

from horizonbet.distributions import SeedSpec
from horizonbet.dqn import TrainConfig, train
from horizonbet.dqn.train import desk_scale_ranges

ACCEPT_TRAIN_SEED = 20260810


@pytest.fixture(scope="session")
def trained_dqn():
    """Desk-scale training run shared by the acceptance criteria.

    Trains from scratch (deterministic for the fixed seed); takes on the
    order of ten minutes of CPU.
    """
    cfg = TrainConfig(episodes=20_000).desk_scale()
    return train(cfg, desk_scale_ranges(), SeedSpec(ACCEPT_TRAIN_SEED))
