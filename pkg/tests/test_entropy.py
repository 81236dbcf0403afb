import numpy as np
import pytest

from tnet.entropy import renyi, von_neumann


def test_flat_spectrum_is_one_bit_for_all_orders():
    p = [0.5, 0.5]
    assert von_neumann(p) == pytest.approx(1.0)
    for a in (0, 0.5, 2, 3, np.inf):
        assert renyi(p, a) == pytest.approx(1.0)


def test_pure_spectrum_has_zero_entropy():
    assert von_neumann([1.0, 0.0]) == 0.0
    assert renyi([1.0], np.inf) == 0.0
    assert renyi([1.0, 0.0, 0.0], 0) == 0.0


def test_renyi_limits():
    """alpha -> 1 approaches von Neumann; alpha = 0 counts the rank."""
    p = np.array([0.6, 0.3, 0.1])
    assert renyi(p, 1 + 1e-7) == pytest.approx(von_neumann(p), abs=1e-6)
    assert renyi(p, 1.0) == von_neumann(p)
    assert renyi(p, 0) == pytest.approx(np.log2(3))
    assert renyi(p, np.inf) == pytest.approx(-np.log2(0.6))


def test_negative_order_rejected():
    with pytest.raises(ValueError):
        renyi([0.5, 0.5], -1)
