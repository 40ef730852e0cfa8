import pytest

from lagwurm.synthgen import ModelLink, SyntheticModelSpec


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run the slow statistical checks')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: slow statistical check')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def chain_spec():
    """X1 -> X2 at lag 1 and X2 -> X3 at lag 2, X1 and X2 autocorrelated."""
    return SyntheticModelSpec(
        3, (ModelLink(0, 1, 1, 0.6), ModelLink(1, 2, 2, -0.6)),
        (0.5, 0.4, 0.0), seed=11)
