import numpy as np
import pytest
from hypothesis import given, strategies as st

from zhangpile import (
    ModelParams,
    SiteLabel,
    classify,
    count_nonfull,
    has_zhang_fsc,
    is_regular,
    is_stable,
    reduce,
)


class TestClassify:
    def test_boundaries(self):
        assert classify(0.0) is SiteLabel.EMPTY
        assert classify(0.5) is SiteLabel.FULL
        assert classify(1.0) is SiteLabel.UNSTABLE
        assert classify(1.6) is SiteLabel.UNSTABLE
        assert classify(0.3) is SiteLabel.ANOMALOUS

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            classify(-0.1)
        with pytest.raises(ValueError):
            classify(float("nan"))

    @given(st.floats(min_value=0.0, max_value=10.0, allow_nan=False))
    def test_partition(self, e):
        label = classify(e)
        expected = (
            SiteLabel.EMPTY
            if e == 0.0
            else SiteLabel.ANOMALOUS
            if e < 0.5
            else SiteLabel.FULL
            if e < 1.0
            else SiteLabel.UNSTABLE
        )
        assert label is expected


class TestReduce:
    @pytest.mark.parametrize(
        "config, labels",
        [
            ((0.0, 0.7), (SiteLabel.EMPTY, SiteLabel.FULL)),
            ((1.2, 1.6), (SiteLabel.UNSTABLE, SiteLabel.UNSTABLE)),
            ((0.3, 0.5, 0.0), (SiteLabel.ANOMALOUS, SiteLabel.FULL, SiteLabel.EMPTY)),
        ],
    )
    def test_elementwise(self, config, labels):
        assert tuple(reduce(config)) == tuple(int(l) for l in labels)

    def test_matches_classify(self):
        rng = np.random.default_rng(0)
        e = 2.0 * rng.random(50)
        assert all(reduce(e)[j] == classify(e[j]) for j in range(50))


class TestRegular:
    def test_examples(self):
        assert is_regular((0.6, 0.0, 0.9))
        assert not is_regular((0.6, 0.3))
        assert not is_regular((0.0, 0.8, 0.0))

    def test_unstable_rejected(self):
        with pytest.raises(ValueError):
            is_regular((1.2, 0.5))


class TestForbiddenSubconfiguration:
    def test_examples(self):
        assert has_zhang_fsc((0.2, 0.9, 0.1))
        assert not has_zhang_fsc((0.6, 0.0, 0.9))
        assert not has_zhang_fsc((0.9,))

    def test_unstable_site_blocks_interval(self):
        # two light sites separated by an unstable one: no valid interval
        assert not has_zhang_fsc((0.3, 1.2, 0.2))

    def _bruteforce(self, e):
        # definitional check over every interval
        n = len(e)
        for lo in range(n):
            for hi in range(lo + 1, n):
                window = e[lo : hi + 1]
                deg = [1] + [2] * (hi - lo - 1) + [1]
                if all(2.0 * v < d for v, d in zip(window, deg)):
                    return True
        return False

    def test_stable_equivalence_with_nonfull_count(self):
        rng = np.random.default_rng(7)
        for _ in range(400):
            n = int(rng.integers(1, 13))
            e = rng.random(n)
            expect = count_nonfull(e) >= 2
            assert has_zhang_fsc(e) == expect == self._bruteforce(list(e))

    @given(st.lists(st.floats(min_value=0.0, max_value=3.0, allow_nan=False), min_size=1, max_size=10))
    def test_scan_matches_bruteforce(self, e):
        assert has_zhang_fsc(e) == self._bruteforce(e)


class TestModelParams:
    def test_validation(self):
        ModelParams(n_sites=1, a=0.0, b=1.0)
        with pytest.raises(ValueError):
            ModelParams(n_sites=0, a=0.0, b=1.0)
        with pytest.raises(ValueError):
            ModelParams(n_sites=2, a=0.5, b=0.5)
        with pytest.raises(ValueError):
            ModelParams(n_sites=2, a=-0.1, b=0.5)
        with pytest.raises(ValueError):
            ModelParams(n_sites=2, a=0.0, b=1.1)
        with pytest.raises(ValueError):
            ModelParams(n_sites=2, a=0.0, b=1.0, critical_energy=2.0)

    def test_mean_addition(self):
        assert ModelParams(n_sites=3, a=0.5, b=1.0).mean_addition == 0.75

    def test_stability_predicate(self):
        assert is_stable((0.0, 0.99))
        assert not is_stable((0.5, 1.0))
