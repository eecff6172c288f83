import itertools

import numpy as np
import pytest

from zhangpile import asm_add, asm_relax_bruteforce, asm_relax_waves, is_recurrent

# Wave-ordered relaxation of an 11-site example: one grain added to the 7th
# site (index 6), states after each parallel toppling group.
ELEVEN_SITE_SEQUENCE = [
    (1, 1, 0, 1, 1, 1, 2, 1, 1, 0, 1),
    (1, 1, 0, 1, 1, 2, 0, 2, 1, 0, 1),
    (1, 1, 0, 1, 2, 0, 2, 0, 2, 0, 1),
    (1, 1, 0, 2, 0, 1, 2, 1, 0, 1, 1),
    (1, 1, 1, 0, 1, 1, 2, 1, 0, 1, 1),
    (1, 1, 1, 0, 1, 2, 0, 2, 0, 1, 1),
    (1, 1, 1, 0, 2, 0, 2, 0, 1, 1, 1),
    (1, 1, 1, 1, 0, 1, 2, 0, 1, 1, 1),
    (1, 1, 1, 1, 0, 2, 0, 1, 1, 1, 1),
    (1, 1, 1, 1, 1, 0, 1, 1, 1, 1, 1),
]


def random_recurrent(rng, n):
    g = np.ones(n, dtype=np.int64)
    if rng.random() < 0.8:
        g[int(rng.integers(n))] = 0
    return g


class TestClosedForm:
    def test_eleven_site_example(self):
        start = np.array(ELEVEN_SITE_SEQUENCE[0])
        start[6] -= 1  # remove the added grain to get the stable input
        final, counts = asm_add(start, 6)
        assert tuple(final) == ELEVEN_SITE_SEQUENCE[-1]
        assert counts.tolist() == [0, 0, 0, 1, 2, 3, 3, 2, 1, 0, 0]

    def test_empty_site_fills(self):
        final, counts = asm_add((0,), 0)
        assert tuple(final) == (1,)
        assert counts.tolist() == [0]

    def test_all_full_three_sites(self):
        # oracle (grain-by-grain): (1,2,1) -> (2,0,2) -> (0,1,2) -> (0,2,0)
        # -> (1,0,1); counts (1,2,1)
        final, counts = asm_add((1, 1, 1), 1)
        assert tuple(final) == (1, 0, 1)
        assert counts.tolist() == [1, 2, 1]

    def test_unstable_input_rejected(self):
        with pytest.raises(ValueError):
            asm_add((2, 0), 0)


class TestBruteforceAgreement:
    def test_eleven_site_wave_snapshots(self):
        g = np.array(ELEVEN_SITE_SEQUENCE[0])
        final, counts, snaps = asm_relax_waves(g, 6)
        assert [tuple(s) for s in snaps] == ELEVEN_SITE_SEQUENCE
        assert counts.tolist() == [0, 0, 0, 1, 2, 3, 3, 2, 1, 0, 0]

    def test_single_site(self):
        final, counts = asm_relax_bruteforce((2,))
        assert tuple(final) == (0,)
        assert counts.tolist() == [1]

    def test_exhaustive_small_recurrent(self):
        for n in range(1, 11):
            configs = [np.ones(n, dtype=np.int64)]
            for z in range(n):
                g = np.ones(n, dtype=np.int64)
                g[z] = 0
                configs.append(g)
            for g in configs:
                for x in range(n):
                    closed, counts = asm_add(g.copy(), x)
                    seeded = g.copy()
                    seeded[x] += 1
                    brute, bcounts = asm_relax_bruteforce(seeded)
                    assert np.array_equal(closed, brute), (g, x)
                    assert np.array_equal(counts, bcounts), (g, x)

    def test_randomized_large(self):
        rng = np.random.default_rng(1)
        for _ in range(10_000):
            n = int(rng.integers(2, 65))
            g = random_recurrent(rng, n)
            x = int(rng.integers(n))
            closed, counts = asm_add(g.copy(), x)
            seeded = g.copy()
            seeded[x] += 1
            brute, bcounts = asm_relax_bruteforce(seeded)
            assert np.array_equal(closed, brute)
            assert np.array_equal(counts, bcounts)

    def test_nonrecurrent_inputs_also_agree(self):
        # stability is the only precondition of the closed form
        rng = np.random.default_rng(2)
        for _ in range(2000):
            n = int(rng.integers(2, 12))
            g = (rng.random(n) < 0.6).astype(np.int64)
            x = int(rng.integers(n))
            closed, counts = asm_add(g.copy(), x)
            seeded = g.copy()
            seeded[x] += 1
            brute, bcounts = asm_relax_bruteforce(seeded)
            assert np.array_equal(closed, brute)
            assert np.array_equal(counts, bcounts)


class TestStructure:
    def test_boundary_sites_topple_at_most_once(self):
        rng = np.random.default_rng(3)
        for _ in range(3000):
            n = int(rng.integers(2, 30))
            g = random_recurrent(rng, n)
            _, counts = asm_add(g, int(rng.integers(n)))
            assert counts[0] <= 1 and counts[-1] <= 1

    def test_addition_operators_commute(self):
        for n in range(2, 9):
            configs = [np.ones(n, dtype=np.int64)]
            for z in range(n):
                g = np.ones(n, dtype=np.int64)
                g[z] = 0
                configs.append(g)
            for g in configs:
                for x, y in itertools.combinations(range(n), 2):
                    xy, _ = asm_add(asm_add(g.copy(), x)[0], y)
                    yx, _ = asm_add(asm_add(g.copy(), y)[0], x)
                    assert np.array_equal(xy, yx), (g, x, y)

    def test_recurrence_predicate(self):
        assert is_recurrent((1, 1, 0, 1))
        assert is_recurrent((1, 1))
        assert not is_recurrent((1, 0, 0, 1))
        assert not is_recurrent((2, 1))

    def test_recurrence_preserved_by_additions(self):
        rng = np.random.default_rng(4)
        g = np.ones(12, dtype=np.int64)
        for _ in range(2000):
            g, _ = asm_add(g, int(rng.integers(12)))
            assert is_recurrent(g)
