"""Shared test fixtures."""

import pytest

from cranq.simulate import available_engines


@pytest.fixture(params=available_engines())
def engine(request):
    """Run the marked test once per available simulation engine."""
    return request.param
