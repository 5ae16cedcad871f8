import pytest

from aa1s import kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # keep JIT compilation out of runtime-budgeted tests
    kernels.warmup()
