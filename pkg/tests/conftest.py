import pytest

from gridway.sim.backend import available_backends


@pytest.fixture(params=available_backends())
def backend(request):
    """Run the test once per importable simulation backend."""
    return request.param


def pytest_report_header(config):
    return f"simulation backends: {', '.join(available_backends())}"
