import pytest

from creditmig import ModelParams, build_traveling_wave


@pytest.fixture(scope="session")
def paper_params():
    return ModelParams(r=0.05, delta=0.03, sigma_h=0.2, sigma_l=0.3,
                       gamma=0.6)


@pytest.fixture(scope="session")
def paper_wave(paper_params):
    return build_traveling_wave(paper_params)
