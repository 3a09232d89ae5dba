"""Shared fixtures: test surfaces and four singularity configurations for the quartic tests."""

import numpy as np
import pytest

from abelquad import shapes

# Table 1: six simple poles in the unit disk
TABLE1_POLES = [0.451559 + 0.21962j, 0.45696 + 0.617636j, 0.706853 + 0.52086j,
                0.533522 + 0.407822j, 0.250598 + 0.471244j, 0.747474 + 0.28336j]
# Table 2: two zeros and four poles in the unit disk
TABLE2_ZEROS = [0.250598 + 0.471244j, 0.747474 + 0.28336j]
TABLE2_POLES = [0.451559 + 0.21962j, 0.45696 + 0.617636j, 0.706853 + 0.52086j,
                0.533522 + 0.407822j]
# Table 3: eight poles, balanced on the sphere
TABLE3_POLES = [1.32607 + 1.3106j, -1.27859 + 1.27903j, 1.30017 - 1.25335j,
                -1.29695 - 1.28728j, 0.471821 - 0.46131j, -0.443743 - 0.468551j,
                0.452511 + 0.463833j, -0.450766 + 0.468879j]
# Table 4: two zeros and ten poles, balanced on the sphere
TABLE4_ZEROS = [0.898261 + 3.24367j, -0.00810208 - 0.25253j]
TABLE4_POLES = [0.00289177 + 0.255035j, 1.03926 - 3.32305j, 1.5921 + 0.915034j,
                -1.61079 + 0.858346j, 1.61098 - 0.845895j, -1.63865 - 0.894138j,
                0.559829 + 0.296053j, -0.564592 + 0.307631j, 0.555884 - 0.307683j,
                -0.550573 - 0.311611j]


def singular_json(zeros=(), poles=()):
    return {"zeros": [{"re": z.real, "im": z.imag, "mult": 1} for z in zeros],
            "poles": [{"re": p.real, "im": p.imag, "mult": 1} for p in poles]}


@pytest.fixture(scope="session")
def torus16():
    return shapes.torus_grid(16)


@pytest.fixture(scope="session")
def origami3():
    return shapes.origami(n=3)


@pytest.fixture(scope="session")
def origami10():
    return shapes.origami(n=10)


@pytest.fixture(scope="session")
def graded_disk():
    return shapes.graded_disk(m=100, r_min=1e-3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)
