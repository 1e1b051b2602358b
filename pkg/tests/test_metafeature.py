import random

import pytest

from fslbm.bitcode import Codeword
from fslbm.metafeature import (
    BinRule,
    EncodingError,
    InsufficientFeaturesError,
    MetaFeatureTemplate,
    TemplateFormatError,
    auto_candidates,
    encode,
    rank_and_select,
    rule_error,
)

AGE = BinRule("threshold", "age", "30")
US = BinRule("equals", "country", "US")
EMAIL = BinRule("presence", "email")


def template(*rules):
    return MetaFeatureTemplate(tuple(rules), tuple(0.0 for _ in rules))


def test_encode_example():
    rec = {"age": "40", "country": "DE", "email": "a@b.c"}
    assert encode(template(AGE, US, EMAIL), rec) == Codeword(0b101, 3)


def test_encode_all_false_and_all_true():
    t = template(AGE, US, EMAIL)
    assert encode(t, {"age": "20", "country": "FR", "email": ""}) == Codeword(0, 3)
    assert encode(t, {"age": "31", "country": "US", "email": "x"}) == Codeword(0b111, 3)


def test_encode_missing_column_names_rule_and_column():
    with pytest.raises(EncodingError, match="country"):
        encode(template(AGE, US), {"age": "40"})
    with pytest.raises(EncodingError, match="age"):
        encode(template(AGE), {"age": "forty"})


def test_encode_is_pure():
    t = template(AGE, US, EMAIL)
    rec = {"age": "35", "country": "US", "email": ""}
    assert {encode(t, rec) for _ in range(5)} == {Codeword(0b110, 3)}


def test_rule_validation():
    with pytest.raises(ValueError):
        BinRule("threshold", "age", "abc")
    with pytest.raises(ValueError):
        BinRule("regex", "age", ".*")
    with pytest.raises(ValueError):
        template(AGE, AGE)


def _bit_records(columns):
    """Records with one 0/1 column per candidate; labels are crisp [p0, p1]."""
    return [{f"c{i}": str(v) for i, v in enumerate(row)} for row in columns]


def test_perfect_feature_ranks_first():
    rng = random.Random(0)
    labels_int = [rng.randint(0, 1) for _ in range(400)]
    rows = [(rng.randint(0, 1), y, rng.randint(0, 1)) for y in labels_int]
    recs = _bit_records(rows)
    labels = [[1.0 - y, float(y)] for y in labels_int]
    cands = [BinRule("equals", f"c{i}", "1") for i in range(3)]
    assert rule_error(cands[1], recs, labels) == 0.0
    tpl = rank_and_select(cands, recs, labels, f=2)
    assert tpl.rules[0] == cands[1] and tpl.scores[0] == 0.0


def test_independent_feature_scores_half():
    rng = random.Random(1)
    n = 20_000
    labels_int = [i % 2 for i in range(n)]
    recs = [{"c": str(rng.randint(0, 1))} for _ in range(n)]
    labels = [[1.0 - y, float(y)] for y in labels_int]
    assert rule_error(BinRule("equals", "c", "1"), recs, labels) == pytest.approx(0.5, abs=0.05)


def test_selection_by_sort_keeps_order():
    # candidate i disagrees with the label on the first 10*i of 100 records
    n = 100
    labels_int = [i % 2 for i in range(n)]
    rows = []
    for r in range(n):
        rows.append(tuple(1 - labels_int[r] if r < 10 * i else labels_int[r] for i in range(5)))
    recs = _bit_records(rows)
    labels = [[1.0 - y, float(y)] for y in labels_int]
    cands = [BinRule("equals", f"c{i}", "1") for i in range(5)]
    errs = [rule_error(c, recs, labels) for c in cands]
    assert errs == pytest.approx([0.0, 0.1, 0.2, 0.3, 0.4])
    tpl = rank_and_select(list(reversed(cands)), recs, labels, f=3)
    assert tpl.rules == tuple(cands[:3])
    assert tpl.scores == pytest.approx((0.0, 0.1, 0.2))


def test_tolerance_gating_and_ties():
    recs = [{"a": "1", "b": "1", "c": "0"}, {"a": "0", "b": "0", "c": "0"}]
    labels = [[0.0, 1.0], [1.0, 0.0]]
    a, b, c = (BinRule("equals", x, "1") for x in "abc")
    # a and b tie at 0 error; input order decides
    assert rank_and_select([b, a, c], recs, labels, 2).rules == (b, a)
    # tolerance cannot leave fewer than f rules
    assert rank_and_select([c, a], recs, labels, 2, error_tolerance=0.0).rules == (a, c)
    with pytest.raises(InsufficientFeaturesError):
        rank_and_select([a, a], recs, labels, 2)


def test_shuffle_changes_only_tie_order():
    rng = random.Random(5)
    recs = [{f"c{i}": str(rng.randint(0, 1)) for i in range(8)} for _ in range(300)]
    labels = [[1.0, 0.0] if r["c0"] == "1" else [0.0, 1.0] for r in recs]
    cands = [BinRule("equals", f"c{i}", "1") for i in range(8)]
    base = rank_and_select(cands, recs, labels, 4)
    for _ in range(5):
        shuffled = list(cands)
        rng.shuffle(shuffled)
        again = rank_and_select(shuffled, recs, labels, 4)
        assert again.scores == base.scores
        # rules with distinct scores sit at the same rank
        for rank, score in enumerate(base.scores):
            if base.scores.count(score) == 1:
                assert again.rules[rank] == base.rules[rank]


def test_selected_never_worse_than_discarded():
    rng = random.Random(9)
    recs = [{f"c{i}": str(rng.random() < 0.5 + 0.05 * i) for i in range(10)} for _ in range(200)]
    labels = [[0.3, 0.7] if r["c9"] == "True" else [0.8, 0.2] for r in recs]
    cands = [BinRule("equals", f"c{i}", "True") for i in range(10)]
    tpl = rank_and_select(cands, recs, labels, 4)
    discarded = [c for c in cands if c not in tpl.rules]
    worst_kept = max(tpl.scores)
    assert all(rule_error(c, recs, labels) >= worst_kept for c in discarded)


def test_fuzzy_labels_count_fractionally():
    recs = [{"a": "1"}, {"a": "0"}]
    labels = [[0.25, 0.75], [0.75, 0.25]]
    assert rule_error(BinRule("equals", "a", "1"), recs, labels) == pytest.approx(0.25)


def test_auto_candidates():
    recs = [
        {"age": "10", "color": "red", "note": "x"},
        {"age": "20", "color": "blue", "note": ""},
        {"age": "30", "color": "red", "note": "y"},
        {"age": "41", "color": "green", "note": ""},
    ]
    rules = auto_candidates(recs, ["age", "color", "note"], top_k=2)
    assert BinRule("threshold", "age", "25.0") in rules
    assert BinRule("equals", "color", "red") in rules
    assert BinRule("equals", "color", "blue") in rules
    assert BinRule("equals", "color", "green") not in rules
    assert BinRule("presence", "note") in rules


def test_template_text_round_trip():
    t = MetaFeatureTemplate((AGE, US, EMAIL), (0.0, 0.125, 0.3333333333333333))
    text = t.to_text()
    assert text.splitlines()[0] == "FSLBM-TPL v1 f=3"
    assert text.splitlines()[1] == "0\tthreshold\tage\t30\t0.0"
    assert MetaFeatureTemplate.from_text(text) == t


@pytest.mark.parametrize(
    "text",
    [
        "",
        "FSLBM-TPL v2 f=1\n0\tpresence\ta\t\t0.0\n",
        "FSLBM-TPL v1 f=2\n0\tpresence\ta\t\t0.0\n",
        "FSLBM-TPL v1 f=1\n0\tpresence\ta\t0.0\n",
        "FSLBM-TPL v1 f=1\n1\tpresence\ta\t\t0.0\n",
        "FSLBM-TPL v1 f=1\n0\tthreshold\ta\tx\t0.0\n",
    ],
)
def test_template_parse_errors(text):
    with pytest.raises(TemplateFormatError):
        MetaFeatureTemplate.from_text(text)
