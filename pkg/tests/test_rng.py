import numpy as np
import pytest

from hypgraph.rng import GOLDEN, SplitMix64, mix64


def reference_splitmix(seed, count):
    """Oracle: the textbook generator in plain Python integers."""
    mask = (1 << 64) - 1
    out = []
    x = seed & mask
    for _ in range(count):
        x = (x + GOLDEN) & mask
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        out.append(z ^ (z >> 31))
    return out


class TestSplitMix64:
    def test_known_first_output(self):
        assert SplitMix64(0).next_u64() == 0xE220A8397B1DCDAF

    @pytest.mark.parametrize("seed", [0, 1, 42, 2**63 + 5, 2**64 - 1])
    def test_matches_reference(self, seed):
        want = reference_splitmix(seed, 20)
        assert [int(v) for v in SplitMix64(seed).next_u64(20)] == want

    def test_chunking_does_not_change_stream(self):
        a = SplitMix64(7).next_u64(10)
        g = SplitMix64(7)
        b = [g.next_u64() for _ in range(3)] + list(g.next_u64(7))
        assert [int(v) for v in a] == [int(v) for v in b]

    def test_uniform_range_and_mean(self):
        x = SplitMix64(3).uniform(-2.0, 5.0, 100_000)
        assert x.min() >= -2.0 and x.max() < 5.0
        assert x.mean() == pytest.approx(1.5, abs=0.05)

    def test_random_resolution(self):
        x = SplitMix64(4).random(1000)
        # 53-bit doubles: every value is an exact multiple of 2^-53
        assert np.all(x * 2.0**53 == np.floor(x * 2.0**53))

    def test_normal_moments(self):
        z = SplitMix64(5).normal(200_001)
        assert z.shape == (200_001,)
        assert z.mean() == pytest.approx(0.0, abs=0.01)
        assert z.std() == pytest.approx(1.0, abs=0.01)

    def test_determinism(self):
        a, b = SplitMix64(99), SplitMix64(99)
        assert np.array_equal(a.normal((4, 3)), b.normal((4, 3)))
        assert a.random() == b.random()

    def test_mix64_vectorized(self):
        z = np.arange(5, dtype=np.uint64)
        assert [int(v) for v in mix64(z)] == [int(mix64(np.uint64(v))) for v in range(5)]
