import numpy as np

from stegolab.prng import GOLDEN, MASK64, KeyedPrng, mix64, parse_key, prng_mix, prng_mix_array


def reference_splitmix(seed, count):
    """Independent transcription of the recurrence, kept deliberately dumb."""
    out = []
    state = seed & MASK64
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        out.append(z ^ (z >> 31))
    return out


def test_stream_matches_reference_recurrence():
    for seed in (0, 1, 0xDEADBEEF, MASK64):
        gen = KeyedPrng(seed)
        got = [gen.next_u64() for _ in range(16)]
        assert got == reference_splitmix(seed, 16)


def test_prng_mix_matches_finalizer_definition():
    for key in (0, 7, 2**63):
        for index in (0, 1, 12345):
            assert prng_mix(key, index) == mix64(key ^ ((index * GOLDEN) & MASK64))


def test_prng_mix_array_agrees_with_scalar():
    idx = np.arange(1000, dtype=np.uint64)
    vec = prng_mix_array(0xABCDEF, idx)
    for i in (0, 1, 500, 999):
        assert int(vec[i]) == prng_mix(0xABCDEF, i)


def test_prng_mix_injective_sample():
    vals = prng_mix_array(42, np.arange(200000, dtype=np.uint64))
    assert np.unique(vals).size == vals.size


def test_bits_balanced_and_prefix_stable():
    bits = KeyedPrng(42).bits(200000)
    assert abs(bits.mean() - 0.5) < 0.01
    assert np.array_equal(KeyedPrng(9).bits(40), KeyedPrng(9).bits(333)[:40])


def test_normal_moments():
    x = KeyedPrng(3).normal(200000)
    assert abs(x.mean()) < 0.01
    assert abs(x.std() - 1.0) < 0.01


def test_choice_without_replacement_distinct():
    gen = KeyedPrng(5)
    pick = gen.choice_without_replacement(50, 20)
    assert len(set(pick.tolist())) == 20
    assert all(0 <= v < 50 for v in pick)


def test_parse_key():
    assert parse_key("00000000000000ff") == 255
    assert parse_key("FFFFFFFFFFFFFFFF") == MASK64
    for bad in ("xyz", "123", "0" * 17, "g" * 16):
        try:
            parse_key(bad)
        except ValueError:
            continue
        raise AssertionError("accepted %r" % bad)
