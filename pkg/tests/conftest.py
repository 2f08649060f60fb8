from __future__ import annotations

import pytest

from onit.simulate import Scenario


@pytest.fixture(scope="session")
def contrived_900():
    """20,000 cards: 10,000 linked (5,000/4,000/1,000), ten precincts of
    1,000 split 900/100 against 100/900; 5% margin."""
    return Scenario.contrived(900)


@pytest.fixture(scope="session")
def contrived_900_election(contrived_900):
    return contrived_900.to_election()


@pytest.fixture(scope="session")
def contrived_990():
    return Scenario.contrived(990)
