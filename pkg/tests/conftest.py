"""Session fixtures: one shared fleet, its splits, and its models."""

import pytest

import fleetlab
from noisefp.detect import fit_noise_floor
from noisefp.svm import train


@pytest.fixture(scope="session")
def fleet_profiles():
    return fleetlab.fleet_profiles()


@pytest.fixture(scope="session")
def fleet_pmap(fleet_profiles):
    return {p.sensor_id: p for p in fleet_profiles}


@pytest.fixture(scope="session")
def fleet_chunks(fleet_profiles):
    """(train_map, test_map) on the frozen fleet."""
    return fleetlab.fleet_split(fleet_profiles)


@pytest.fixture(scope="session")
def fleet_dataset(fleet_chunks):
    return fleetlab.dataset_from(fleet_chunks[0])


@pytest.fixture(scope="session")
def fleet_model_defaults(fleet_dataset):
    return train(fleet_dataset)


@pytest.fixture(scope="session")
def fleet_model_tuned(fleet_dataset):
    return train(fleet_dataset, c=fleetlab.TUNED_C, gamma=fleetlab.TUNED_GAMMA)


@pytest.fixture(scope="session")
def fleet_floors(fleet_chunks):
    train_map = fleet_chunks[0]
    return {sid: fit_noise_floor(sid, train_map[sid]) for sid in train_map}
