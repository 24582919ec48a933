"""Shared fixtures: trained models used by the end-to-end suites.

The full-schedule model is a committed artifact (training takes ~15 min);
the desk-scale model is trained fresh per session (~45 s). Property tests
never request either fixture, so they run on a bare checkout.
"""

from pathlib import Path

import pytest

from su2tomo import network

FULL_MODEL_PATH = (
    Path(__file__).resolve().parent.parent / "models" / "su2tomo-full-v1.bin"
)


@pytest.fixture(scope="session")
def full_model():
    if not FULL_MODEL_PATH.exists():
        pytest.skip(
            "full-schedule model artifact missing; regenerate with "
            "'su2tomo train --seed 7 --out models/su2tomo-full-v1.bin'"
        )
    return network.load_model(str(FULL_MODEL_PATH))


@pytest.fixture(scope="session")
def desk_model():
    model, _ = network.train(network.TrainConfig.desk(seed=1234))
    return model
