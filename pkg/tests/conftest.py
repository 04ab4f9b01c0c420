import numpy as np
import pytest

from sas_transim import (MachineState, SwingRhsParams, builtin_case,
                         initialized_case)


@pytest.fixture(scope="session")
def smib_case():
    return initialized_case(builtin_case("smib"))


@pytest.fixture(scope="session")
def smib_rhs(smib_case):
    return SwingRhsParams.from_case(smib_case, "pre_fault")


@pytest.fixture(scope="session")
def smib_state(smib_case):
    """Post-disturbance initial state of the built-in single-machine case."""
    return MachineState(np.array(smib_case.initial_delta),
                        np.array(smib_case.initial_omega))


@pytest.fixture(scope="session")
def ieee9_case():
    return initialized_case(builtin_case("ieee9"))


@pytest.fixture(scope="session")
def ieee39_case():
    return initialized_case(builtin_case("ieee39"))
