import numpy as np
import pytest

from growstat._kernels import log_chi_mgf


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # trigger JIT compilation of every kernel branch once, outside timed tests
    log_chi_mgf(3, np.array([-11.0, -0.5, 0.0, 0.5, 11.0]))
    log_chi_mgf(600, np.array([-1.0, 1.0]))
