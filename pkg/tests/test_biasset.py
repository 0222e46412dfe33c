import numpy as np
import pytest
from sklearn.base import clone

from biasforge.biasset import (
    DISTRACTOR, FUZZY, REFERENCE, BiasPhrase, BiasSet, BiasSetBuilder, SchemeConfig, build_test_bias_set,
    build_training_bias_set, contains_subsequence, derive_seed, harvest_pool, ngrams,
)
from biasforge.errors import ConfigError, DataFormatError
from biasforge.inventory import FuzzyInventory
from biasforge.tagging import detect_proper_nouns

INV = FuzzyInventory({"joan": [("john", 5), ("jean", 3)], "john": [("joan", 5)], "jean": [("joan", 3)],
                      "dan": [("don", 2)], "don": [("dan", 2)]})
POOL = tuple(f"name{i}" for i in range(100)) + ("dan", "john")
JOAN = detect_proper_nouns("call joan's mobile")


def sample(scheme, seed=0, **kw):
    cfg = SchemeConfig(scheme, **kw)
    return build_training_bias_set((JOAN.tokens, JOAN), POOL, INV, cfg, np.random.default_rng(seed))


def test_joan_example_under_nnp_fuzzy():
    bs = sample("nnp_fuzzy")
    origins = {p.text: p.origin for p in bs.phrases}
    assert origins["joan"] == REFERENCE
    assert origins["john"] == FUZZY and origins["jean"] == FUZZY
    assert bs.truth_texts == ("joan",)
    assert len(bs) == 64


def test_alpha_drop_one_always_empty():
    assert all(len(sample("nnp_fuzzy", s, alpha_drop=1.0)) == 0 for s in range(50))


def test_vanilla_has_no_fuzzy_and_nnp_only_nnp_references():
    for seed in range(50):
        van = sample("vanilla", seed)
        assert all(p.origin != FUZZY for p in van.phrases)
        nnp = sample("nnp", seed)
        refs = [p.text for p in nnp.phrases if p.origin == REFERENCE]
        assert refs == ["joan"]


def test_distractors_fuzzed_only_in_fuzzy_scheme_by_default():
    for seed in range(20):
        nf = sample("nnp_fuzzy", seed)
        assert "don" not in nf.texts  # only reachable as an alternative of the distractor "dan"
    assert SchemeConfig("fuzzy").fuzzes_distractors
    assert not SchemeConfig("nnp_fuzzy").fuzzes_distractors
    assert SchemeConfig("nnp_fuzzy", fuzz_distractors=True).fuzzes_distractors


def test_fuzzed_distractors_bring_alternatives():
    hits = 0
    for seed in range(40):
        bs = sample("nnp_fuzzy", seed, fuzz_distractors=True)
        if "dan" in bs.texts:
            hits += 1
            assert "don" in bs.texts
    assert hits > 0


def test_no_nnp_spans_gives_only_distractors():
    cfg = SchemeConfig("nnp")
    bs = build_training_bias_set((("the", "weather"), []), POOL, None, cfg, np.random.default_rng(0))
    assert bs.truth == () and len(bs) == 64
    assert all(p.origin == DISTRACTOR for p in bs.phrases)


def test_truth_soundness_and_cardinality():
    tokens = ("call", "joan", "and", "dan", "now")
    example = (tokens, ["joan", "dan"])
    pool = ("joan", "dan", "call joan", "x y", "now") + tuple(f"p{i}" for i in range(80))
    for scheme in ("vanilla", "nnp", "fuzzy", "nnp_fuzzy"):
        cfg = SchemeConfig(scheme)
        for seed in range(100):
            bs = build_training_bias_set(example, pool, INV, cfg, np.random.default_rng(seed))
            assert len(bs) <= 64
            assert len(set(bs.texts)) == len(bs)
            truth = set(bs.truth)
            for i, p in enumerate(bs.phrases):
                assert contains_subsequence(tokens, p.tokens) == (i in truth)
            assert sum(p.origin == REFERENCE for p in bs.phrases) <= 3


def test_reproducible_under_seed():
    assert sample("fuzzy", 7) == sample("fuzzy", 7)
    assert sample("fuzzy", 7) != sample("fuzzy", 8)


def test_test_set_with_no_distractors():
    bs = build_test_bias_set(["talk to x"], ["a", "b"], 0, np.random.default_rng(0))
    assert bs.texts == ("talk to x",) and bs.truth == (0,)


def test_test_set_without_correct_phrase():
    bs = build_test_bias_set([], [f"d{i}" for i in range(20)], 10, np.random.default_rng(0))
    assert len(bs) == 10 and bs.truth == ()


def test_test_set_clamps_to_pool_and_cap():
    pool = [f"d{i}" for i in range(3255)]
    big = build_test_bias_set(["x"], pool, 5000, np.random.default_rng(0))
    assert len(big) == 3256
    capped = build_test_bias_set(["x"], pool, 5000, np.random.default_rng(0), n_max=64)
    assert len(capped) == 64 and capped.truth_texts == ("x",)


def test_test_set_fixed_phrases_are_fuzzy():
    bs = build_test_bias_set(["joan"], ["a", "b", "john"], 3, np.random.default_rng(1), fixed=["john", "jean"])
    origins = {p.text: p.origin for p in bs.phrases}
    assert origins == {"joan": REFERENCE, "john": FUZZY, "jean": FUZZY, "a": DISTRACTOR, "b": DISTRACTOR}


def test_config_validation():
    with pytest.raises(ConfigError):
        SchemeConfig("bogus")
    with pytest.raises(ConfigError):
        SchemeConfig(n_max=8, k_ref=3, k_fuzzy=3)
    with pytest.raises(ValueError):
        SchemeConfig(alpha_drop=1.5)


def test_config_file_round_trip(tmp_path):
    cfg = SchemeConfig("nnp_fuzzy", alpha_drop=0.05, seed=17)
    p = tmp_path / "scheme.txt"
    p.write_text("".join(cfg.to_lines()))
    assert SchemeConfig.from_file(p) == cfg
    p.write_text("scheme=nnp\nbogus=1\n")
    with pytest.raises(DataFormatError):
        SchemeConfig.from_file(p)


def test_record_round_trip_and_permutation():
    bs = sample("nnp_fuzzy", 3)
    assert BiasSet.from_record(bs.to_record()) == bs
    order = list(reversed(range(len(bs))))
    perm = bs.permuted(order)
    assert perm.truth_texts == bs.truth_texts


def test_invalid_sets_rejected():
    with pytest.raises(ValueError):
        BiasSet(("a", "a"))
    with pytest.raises(ValueError):
        BiasSet(("a",), (1,))
    with pytest.raises(ValueError):
        BiasPhrase("")


def test_ngrams_and_pool():
    assert ngrams(("a", "b", "a"), 2) == ["a", "b", "a b", "b a"]
    ex = [(("call", "joan"), ["joan"]), (("call", "dan"), ["dan"])]
    assert harvest_pool(ex, "nnp") == ("dan", "joan")
    assert harvest_pool(ex, "vanilla", 1) == ("call", "dan", "joan")


def test_derived_seeds_are_stable():
    assert derive_seed(0, 1, "u1") == derive_seed(0, 1, "u1")
    assert derive_seed(0, 1, "u1") != derive_seed(0, 2, "u1")
    assert 0 <= derive_seed(0, "u") < 2 ** 63


def test_builder_estimator_api():
    from biasforge.corpus import TrainingExample

    data = [TrainingExample(f"u{i}", ("call", n), ((1, 2),)) for i, n in enumerate(["joan", "dan", "john", "jean"])]
    builder = BiasSetBuilder("nnp_fuzzy", inventory=INV, seed=3)
    assert clone(builder).get_params()["seed"] == 3
    sets = builder.fit(data).transform(data, epoch=1)
    assert sets == builder.transform(list(reversed(data)), epoch=1)[::-1]
    assert sets != builder.transform(data, epoch=2)
    with pytest.raises(ConfigError):
        BiasSetBuilder("fuzzy").fit(data)
