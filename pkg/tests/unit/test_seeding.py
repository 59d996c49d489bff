import unittest

import numpy as np
import pytest

from nax_forecast.seeding import BOOTSTRAP, GRID, TRAINING, derived_seed, substream


class SubstreamTest(unittest.TestCase):

    def test_deterministic(self):
        """
        GIVEN the same seed, stream name and indices
        WHEN two sub-streams are drawn from
        THEN they produce the same numbers
        """
        np.testing.assert_array_equal(
            substream(7, GRID, 3, 1).standard_normal(5), substream(7, GRID, 3, 1).standard_normal(5))

    def test_streams_differ(self):
        """
        GIVEN one seed
        WHEN different stream names or indices are used
        THEN the draws differ
        """
        draws = [substream(7, name, *indices).standard_normal(5)
                 for name, indices in ((TRAINING, ()), (BOOTSTRAP, ()), (GRID, (0,)), (GRID, (1,)))]

        for i in range(len(draws)):
            for j in range(i + 1, len(draws)):
                self.assertFalse(np.array_equal(draws[i], draws[j]))

    def test_unknown_stream(self):
        with self.assertRaises(ValueError):
            substream(7, "weather")


@pytest.mark.parametrize("seed", [0, 1, 20190101])
def test_derived_seed_is_stable_int(seed):
    value = derived_seed(seed, TRAINING, 2)
    assert isinstance(value, int)
    assert 0 <= value < 2 ** 31 - 1
    assert value == derived_seed(seed, TRAINING, 2)
