import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare
from sympy import isprime

from duabe.errors import EmptyInputError, FormatError
from duabe.group import (
    DEFAULT_PARAMS,
    ORDER,
    G1Element,
    G2Element,
    GroupParams,
    GtElement,
    Scalar,
    hash_to_g1,
    hash_to_g1_reference,
    pairing,
    random_scalar,
)

g1, g2 = DEFAULT_PARAMS.g1, DEFAULT_PARAMS.g2
scalars = st.integers(min_value=0, max_value=ORDER - 1).map(Scalar)


def test_order_is_prime():
    assert isprime(DEFAULT_PARAMS.order)
    assert DEFAULT_PARAMS.order.bit_length() == 255


def test_pairing_small_exponents():
    assert pairing(g1 ** 2, g2 ** 3) == pairing(g1, g2) ** 6


def test_pairing_non_degenerate():
    assert not pairing(g1, g2).is_identity()
    assert pairing(g1, g2) != GtElement.identity()


def test_pairing_moves_exponent_between_sources():
    rng = random.Random(1)
    for _ in range(100):
        a = random_scalar(rng)
        assert pairing(g1 ** a, g2) == pairing(g1, g2 ** a)


def test_bilinearity_100_samples():
    rng = random.Random(2)
    base = pairing(g1, g2)
    for _ in range(100):
        a, b = random_scalar(rng), random_scalar(rng)
        assert pairing(g1 ** a, g2 ** b) == base ** (a * b)


@pytest.mark.parametrize("cls,gen", [(G1Element, g1), (G2Element, g2)])
def test_source_group_laws(cls, gen):
    rng = random.Random(3)
    a, b = random_scalar(rng), random_scalar(rng)
    x = gen ** a
    assert (x ** 0) == cls.identity()
    assert x ** (a + b) == (x ** a) * (x ** b)
    assert (x * ~x).is_identity()
    assert x / x == cls.identity()
    assert gen ** ORDER == cls.identity()


def test_gt_exponent_laws():
    rng = random.Random(4)
    x = pairing(g1, g2) ** random_scalar(rng)
    a, b = random_scalar(rng), random_scalar(rng)
    assert x ** 0 == GtElement.identity()
    assert x ** (a + b) == (x ** a) * (x ** b)
    assert x / x == GtElement.identity()


@settings(max_examples=30, deadline=None)
@given(scalars)
def test_serialization_roundtrip_all_groups(k):
    for elem, cls in ((g1 ** k, G1Element), (g2 ** k, G2Element), (pairing(g1, g2) ** k, GtElement)):
        data = elem.to_bytes()
        assert cls.from_bytes(data) == elem
        assert cls.from_bytes(data).to_bytes() == data


def test_identity_encodings_roundtrip():
    for cls in (G1Element, G2Element, GtElement):
        ident = cls.identity()
        assert cls.from_bytes(ident.to_bytes()).is_identity()


def test_generator_encodings_match_zcash_format():
    # compressed flag set, infinity clear; standard BLS12-381 generator prefixes
    assert g1.to_bytes().hex().startswith("97f1d3a73197d794")
    assert g2.to_bytes().hex().startswith("93e02b6052719f60")


@pytest.mark.parametrize("cls,size", [(G1Element, 48), (G2Element, 96), (GtElement, 576)])
def test_wrong_length_rejected(cls, size):
    with pytest.raises(FormatError):
        cls.from_bytes(b"\x00" * (size - 1))


def test_gt_rejects_non_subgroup_element():
    data = bytearray(GtElement.identity().to_bytes())
    data[-1] ^= 1  # 1 + tiny perturbation is not an r-th root of unity
    with pytest.raises(FormatError):
        GtElement.from_bytes(bytes(data))


def test_group_params_roundtrip():
    assert GroupParams.from_bytes(DEFAULT_PARAMS.to_bytes()) == DEFAULT_PARAMS


# -- scalars ----------------------------------------------------------------

@settings(max_examples=200)
@given(scalars, scalars, scalars)
def test_scalar_field_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a + b == b + a and a * b == b * a
    assert a * (b + c) == a * b + a * c
    assert a - a == 0 and a + (-a) == 0
    if a != 0:
        assert a * a.inverse() == 1


def test_scalar_inverse_of_zero_rejected():
    with pytest.raises(ZeroDivisionError):
        Scalar(0).inverse()


def test_scalar_bytes_roundtrip_and_range():
    s = Scalar(ORDER - 1)
    assert Scalar.from_bytes(s.to_bytes()) == s
    with pytest.raises(FormatError):
        Scalar.from_bytes(ORDER.to_bytes(32, "big"))


# -- hashing ----------------------------------------------------------------

def test_hash_deterministic():
    assert hash_to_g1("alice") == hash_to_g1("alice")
    assert hash_to_g1("alice") == hash_to_g1(b"alice")


def test_hash_rejects_empty():
    with pytest.raises(EmptyInputError):
        hash_to_g1("")


def test_hash_distinct_over_corpus():
    encodings = {hash_to_g1(f"user-{i:05d}").to_bytes() for i in range(10_000)}
    assert len(encodings) == 10_000


def test_hash_domain_separated():
    other = GroupParams(domain_tag=b"SOME-OTHER-PROTOCOL")
    assert hash_to_g1("alice") != hash_to_g1("alice", other)


def test_hash_matches_rfc9380_vector():
    # RFC 9380 appendix J.9.1, BLS12381G1_XMD:SHA-256_SSWU_RO_, msg "abc"
    params = GroupParams(domain_tag=b"QUUX-V01-CS02-with-BLS12381G1_XMD:SHA-256_SSWU_RO_")
    x = hash_to_g1(b"abc", params)._coords()[0]
    assert x == int(
        "03567bc5ef9c690c2ab2ecdf6a96ef1c139cc0b2f284dca0a9a7943388a49a3a"
        "ee664ba5379a7655d3c68900be2f6903", 16)


@pytest.mark.parametrize("gid", [b"alice", b"bob", "élodie".encode(), b"x" * 300])
def test_hash_matches_pure_python_reference(gid):
    assert hash_to_g1(gid) == hash_to_g1_reference(gid)


# -- randomness -------------------------------------------------------------

def test_seeded_rng_reproducible():
    a = [random_scalar(random.Random(42)) for _ in range(1)]
    run1 = [random_scalar(r) for r in [random.Random(42)] for _ in range(20)]
    r = random.Random(42)
    run2 = [random_scalar(r) for _ in range(20)]
    assert run1[0] == a[0]
    r = random.Random(42)
    assert [random_scalar(r) for _ in range(20)] == run2


def test_random_scalar_range():
    rng = random.Random(5)
    assert all(0 <= random_scalar(rng).value < ORDER for _ in range(10_000))
    assert all(0 <= random_scalar().value < ORDER for _ in range(1_000))


def test_random_scalar_low_byte_uniform():
    rng = random.Random(6)
    counts = [0] * 256
    for _ in range(100_000):
        counts[random_scalar(rng).value & 0xFF] += 1
    assert chisquare(counts).pvalue > 0.001


@settings(max_examples=300, deadline=None)
@given(st.sampled_from([G1Element, G2Element]), st.data())
def test_decoders_fail_only_with_format_error(cls, data):
    valid = bytearray((g1 ** 7 if cls is G1Element else g2 ** 7).to_bytes())
    i = data.draw(st.integers(0, len(valid) - 1))
    valid[i] ^= data.draw(st.integers(1, 255))
    try:
        cls.from_bytes(bytes(valid))
    except FormatError:
        pass


@settings(max_examples=100, deadline=None)
@given(st.binary(min_size=48, max_size=48))
def test_g1_decoder_random_bytes(raw):
    try:
        G1Element.from_bytes(raw)
    except FormatError:
        pass
