import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fslbm.labels import (
    EmptyDistributionError,
    LabelDistribution,
    argmax_label,
    crisp,
    fuzziness,
    merge,
    normalize,
    parse_weights,
    render,
    total_variation,
)

raw_weights = st.lists(st.floats(0, 1e6, allow_nan=False), min_size=2, max_size=6).filter(
    lambda w: sum(w) > 1e-300
)


def test_normalize_examples():
    assert normalize([1, 4]).probs == pytest.approx((0.2, 0.8))
    assert normalize([7.5, 0, 0]).probs == (1.0, 0.0, 0.0)
    assert normalize([3, 3, 3]).probs == pytest.approx((1 / 3,) * 3)


def test_normalize_rejects_empty_and_negative():
    with pytest.raises(EmptyDistributionError):
        normalize([0, 0])
    with pytest.raises(ValueError):
        normalize([1, -1])


def test_distribution_invariants():
    with pytest.raises(ValueError):
        LabelDistribution((0.5, 0.6))
    with pytest.raises(ValueError):
        LabelDistribution((1.0,))
    with pytest.raises(ValueError):
        LabelDistribution((1.5, -0.5))


@pytest.mark.parametrize("probs,expected", [((1.0, 0.0), 0.0), ((0.5, 0.5), 1.0), ((0.2, 0.8), 0.4)])
def test_fuzziness_examples(probs, expected):
    assert fuzziness(LabelDistribution(probs)) == pytest.approx(expected, abs=1e-12)


def test_fuzziness_uniform_is_one_for_any_k():
    for k in range(2, 8):
        assert fuzziness(normalize([1] * k)) == pytest.approx(1.0)
        assert fuzziness(crisp(k - 1, k)) == 0.0


@pytest.mark.parametrize(
    "probs,expected", [((0.2, 0.8), 1), ((0.5, 0.5), 0), ((0.1, 0.3, 0.6), 2), ((0.4, 0.2, 0.4), 0)]
)
def test_argmax_examples(probs, expected):
    assert argmax_label(LabelDistribution(probs)) == expected


@given(raw_weights, st.floats(1e-3, 1e3))
def test_normalize_scale_invariant(raw, c):
    a = normalize(raw).probs
    b = normalize([c * w for w in raw]).probs
    assert max(abs(x - y) for x, y in zip(a, b)) <= 1e-12


@given(raw_weights)
def test_argmax_invariant_under_normalization(raw):
    assert argmax_label(normalize(raw)) == raw.index(max(raw))


@given(raw_weights, st.randoms())
def test_fuzziness_permutation_invariant(raw, rnd):
    shuffled = list(raw)
    rnd.shuffle(shuffled)
    assert fuzziness(normalize(shuffled)) == pytest.approx(fuzziness(normalize(raw)), abs=1e-12)


def test_fuzziness_monotone_two_class():
    values = [fuzziness(normalize([p, 100 - p])) for p in range(0, 51)]
    assert values == sorted(values)


def test_merge_commutative_associative():
    a, b, c = [1.0, 0.0], [0.5, 2.0], [0.25, 0.25]
    assert merge(a, b) == merge(b, a)
    assert merge(merge(a, b), c) == merge(a, merge(b, c))
    with pytest.raises(ValueError):
        merge([1.0], [1.0, 2.0])


def test_render_and_parse():
    assert render(normalize([1, 4])) == "0:0.2000,1:0.8000"
    assert parse_weights("1") == [0.0, 1.0]
    assert parse_weights("0:1,2:3") == [1.0, 0.0, 3.0]
    assert parse_weights("0", k=3) == [1.0, 0.0, 0.0]
    for bad in ["", "a", "0:x", "0,0", "-1", "0:-1", "3:1"]:
        with pytest.raises(ValueError):
            parse_weights(bad, k=3)
    with pytest.raises(EmptyDistributionError):
        parse_weights("0:0,1:0")


def test_total_variation():
    assert total_variation(crisp(0, 2), crisp(1, 2)) == 1.0
    assert total_variation(normalize([1, 4]), normalize([2, 8])) == pytest.approx(0.0)


def test_crisp_is_onehot():
    for k, i in itertools.product(range(2, 5), range(4)):
        if i < k:
            assert crisp(i, k).probs[i] == 1.0 and sum(crisp(i, k).probs) == 1.0
