import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biasforge.errors import DataFormatError
from biasforge.inventory import (
    FuzzyInventory, FuzzyInventoryMiner, HypothesisCorpus, differing_spans, fuzzy_alternatives, mine_pairs,
)
from biasforge.phonetics import phrase_similarity
from oracles import exhaustive_pair_counts

LENNON = HypothesisCorpus((("u1", ["call john lemon", "call john lennon"]),))


def as_counts(inv):
    return {(a, b): c for a, b, c in inv.items()}


def test_lemon_lennon_pair_counted_both_ways():
    inv = mine_pairs(LENNON)
    assert as_counts(inv) == {("lemon", "lennon"): 1, ("lennon", "lemon"): 1}


def test_single_hypothesis_gives_empty_inventory():
    assert len(mine_pairs(HypothesisCorpus((("u", ["a b c"]),)))) == 0


def test_alternatives_with_trivial_and_strict_threshold():
    inv = mine_pairs(LENNON)
    assert fuzzy_alternatives(inv, "lemon", k=3, tau_phon=0.0) == ["lennon"]
    assert fuzzy_alternatives(inv, "lemon", k=3, tau_phon=1.0) == []


def test_joan_alternatives_ranked_by_count():
    records = [(f"j{i}", ["call joan", "call john"]) for i in range(5)]
    records += [(f"e{i}", ["call joan now", "call jean now"]) for i in range(3)]
    corpus = HypothesisCorpus(tuple(records))
    inv = mine_pairs(corpus)
    assert inv.count("joan", "john") == 5 and inv.count("joan", "jean") == 3
    assert as_counts(inv) == exhaustive_pair_counts(corpus, 3)
    assert phrase_similarity("joan", "john") >= 0.6 and phrase_similarity("joan", "jean") >= 0.6
    assert fuzzy_alternatives(inv, "joan", k=2, tau_phon=0.6) == ["john", "jean"]


def test_absent_phrase_has_no_alternatives():
    assert fuzzy_alternatives(mine_pairs(LENNON), "nobody") == []


def test_nested_hypotheses_take_prefix_first():
    assert differing_spans(("a", "b", "a"), ("a", "a")) == (("b",), ())
    assert differing_spans(("x", "y"), ("x", "z", "y")) == ((), ("z",))


def test_pure_insertion_is_skipped():
    corpus = HypothesisCorpus((("u", ["call joan", "call joan now"]),))
    assert len(mine_pairs(corpus)) == 0


def test_long_spans_are_skipped():
    corpus = HypothesisCorpus((("u", ["a b c d e", "a v w x y"]),))
    assert len(mine_pairs(corpus, max_ngram_len=3)) == 0
    assert len(mine_pairs(corpus, max_ngram_len=4)) == 2


WORDS = ["call", "john", "joan", "jean", "lemon", "lennon", "now", "a", "b"]
hyp = st.lists(st.sampled_from(WORDS), min_size=1, max_size=5).map(" ".join)
corpora = st.lists(st.lists(hyp, min_size=1, max_size=5), min_size=1, max_size=25)


@settings(max_examples=60, deadline=None)
@given(corpora, st.integers(1, 3))
def test_matches_exhaustive_oracle(utts, max_len):
    corpus = HypothesisCorpus(tuple((f"u{i}", h) for i, h in enumerate(utts)))
    inv = mine_pairs(corpus, max_len)
    assert as_counts(inv) == exhaustive_pair_counts(corpus, max_len)
    for a, b, c in inv.items():
        assert a != b and c > 0 and inv.count(b, a) == c


@settings(max_examples=30, deadline=None)
@given(corpora, st.randoms(use_true_random=False))
def test_order_invariance(utts, rnd):
    corpus = HypothesisCorpus(tuple((f"u{i}", h) for i, h in enumerate(utts)))
    shuffled = [(u, rnd.sample(list(h), len(h))) for u, h in corpus]
    rnd.shuffle(shuffled)
    shuffled = HypothesisCorpus(tuple((u, [" ".join(t) for t in h]) for u, h in shuffled))
    assert mine_pairs(corpus) == mine_pairs(shuffled)


def test_raising_threshold_never_grows_result():
    records = [(f"u{i}", ["call joan", "call john", "call jean", "call bill", "call dan"]) for i in range(3)]
    inv = mine_pairs(HypothesisCorpus(tuple(records)))
    sizes = [len(fuzzy_alternatives(inv, "joan", k=10, tau_phon=t)) for t in (0.0, 0.3, 0.6, 0.8, 1.0)]
    assert sizes == sorted(sizes, reverse=True)
    assert "joan" not in fuzzy_alternatives(inv, "joan", k=10, tau_phon=0.0)


def test_merge_equals_mining_the_union():
    a = HypothesisCorpus((("u1", ["call joan", "call john"]),))
    b = HypothesisCorpus((("u2", ["call joan", "call john", "call jean"]),))
    both = HypothesisCorpus(a.utterances + b.utterances)
    assert mine_pairs(a).merge(mine_pairs(b)) == mine_pairs(both)


def test_file_round_trip_is_sorted_and_stable(tmp_path):
    records = [(f"u{i}", ["call joan", "call john", "call jean"]) for i in range(4)]
    inv = mine_pairs(HypothesisCorpus(tuple(records)))
    p1, p2 = tmp_path / "a.tsv", tmp_path / "b.tsv"
    inv.to_file(p1)
    again = FuzzyInventory.from_file(p1)
    again.to_file(p2)
    assert again == inv
    assert p1.read_bytes() == p2.read_bytes()
    rows = [l.split("\t") for l in p1.read_text().splitlines()]
    assert rows == sorted(rows, key=lambda r: (r[0], -int(r[2]), r[1]))


def test_corpus_file_errors_have_line_numbers(tmp_path):
    p = tmp_path / "hyp.tsv"
    p.write_text("u1\tcall joan\tcall john\nu2\n")
    with pytest.raises(DataFormatError, match=":2"):
        HypothesisCorpus.from_file(p)


def test_invalid_inventories_rejected():
    with pytest.raises(ValueError):
        FuzzyInventory({"a": [("a", 1)]})
    with pytest.raises(ValueError):
        FuzzyInventory({"a": [("b", 0)]})


def test_miner_estimator():
    miner = FuzzyInventoryMiner(k=1, tau_phon=0.0).fit(LENNON)
    assert miner.transform(["lemon", "lennon", "x"]) == [["lennon"], ["lemon"], []]
    assert miner.get_params()["k"] == 1
