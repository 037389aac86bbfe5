import numpy as np
import pytest

from relaxwalk.network import Layer, Network


@pytest.fixture
def net_abs():
    """1 input, hidden [[1], [-1]] with zero bias, output sums both: |x|."""
    return Network(
        [
            Layer(weights=np.array([[1.0], [-1.0]]), bias=np.zeros(2), has_relu=True),
            Layer(weights=np.array([[1.0, 1.0]]), bias=np.zeros(1), has_relu=False),
        ],
        input_dim=1,
    )


@pytest.fixture
def net_abs_doc():
    return {
        "input_dim": 1,
        "layers": [
            {"weights": [[1.0], [-1.0]], "bias": [0.0, 0.0], "relu": True},
            {"weights": [[1.0, 1.0]], "bias": [0.0], "relu": False},
        ],
    }


@pytest.fixture
def net_2d():
    """2 inputs, hidden [[1,1],[1,-1]], output [1,1]; max is 2 on x1 = 1."""
    return Network(
        [
            Layer(weights=np.array([[1.0, 1.0], [1.0, -1.0]]), bias=np.zeros(2),
                  has_relu=True),
            Layer(weights=np.array([[1.0, 1.0]]), bias=np.zeros(1), has_relu=False),
        ],
        input_dim=2,
    )
