"""Desk-scale benchmark recipes: contacts-, songs- and talk-to-like datasets.

A :class:`Benchmark` bundles training examples, a fuzzy inventory mined from
synthetic hypotheses of the training transcripts, and test examples with
fixed bias sets so every compared model sees identical context.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..biasset import BiasSet, BiasSetBuilder, build_test_bias_set, derive_seed
from ..clas.estimator import CLASRecognizer
from ..corpus import SynthConfig, hypothesis_corpus, make_dataset
from ..inventory import mine_pairs
from ..phonetics import Lexicon

CONFUSABLE_PAIRS = (
    ("joan", "john"), ("jean", "jane"), ("kate", "kit"), ("dan", "don"), ("tim", "tom"),
    ("ben", "ken"), ("bill", "phil"), ("rose", "ross"), ("pat", "matt"), ("lena", "nina"),
)
OTHER_NAMES = (
    "alice", "oliver", "sophia", "william", "emma", "lucas", "isabella", "henry", "charlotte", "jack",
    "amelia", "daniel", "harper", "samuel", "evelyn", "david", "abigail", "joseph", "victoria", "gabriel",
    "hannah", "robert", "natalie", "edward", "audrey", "george", "clara", "frank", "stella", "peter",
)
CONTACT_NAMES = tuple(n for pair in CONFUSABLE_PAIRS for n in pair) + OTHER_NAMES

CONTACT_TEMPLATES = (
    "call <NAME>",
    "call <NAME> 's mobile",
    "text <NAME>",
    "please call <NAME> now",
    "send a message to <NAME>",
    "dial <NAME> 's number",
    "call <NAME> at home",
    "text <NAME> that i am late",
)
SONG_TITLES = (
    "creepy carrots", "sleepy carrots", "yellow submarine", "blue moon", "river fever",
)
SONG_TEMPLATES = ("play <NAME>", "play the song <NAME>", "listen to <NAME>")
TALKTO_APPS = ("cooking buddy", "trivia master", "story time", "news quiz")
TALKTO_TEMPLATES = ("talk to <NAME>", "let me talk to <NAME>", "open <NAME>")


@dataclass(frozen=True)
class BenchmarkConfig:
    """Composition and synthesis settings of a benchmark."""

    n_train: int = 2000
    n_test: int = 200
    n_fuzzy: int = 9
    n_random: int = 40
    confusion_rate: float = 0.5
    tau_phon: float = 0.6
    frame_dim: int = 16
    dur_min: int = 1
    dur_max: int = 3
    noise_sigma: float = 0.8
    seed: int = 0

    def synth(self, seed_offset=0):
        return SynthConfig(self.frame_dim, self.dur_min, self.dur_max, self.noise_sigma, self.seed + seed_offset)

    def to_dict(self):
        return asdict(self)


@dataclass
class Benchmark:
    name: str
    train: list
    test: list
    inventory: object
    entities: tuple
    lexicon: Lexicon
    config: BenchmarkConfig = field(default_factory=BenchmarkConfig)

    def bias_free(self):
        """The test utterances with empty bias sets."""
        return [ex.with_bias_set(BiasSet()) for ex in self.test]

    def builder(self, scheme, alpha_drop=0.0, seed=0, **kwargs):
        inv = self.inventory if scheme in ("fuzzy", "nnp_fuzzy") else None
        return BiasSetBuilder(scheme, alpha_drop=alpha_drop, tau_phon=self.config.tau_phon, seed=seed,
                              inventory=inv, lexicon=self.lexicon, **kwargs)


def test_bias_sets(examples, inventory, entities, n_fuzzy=9, n_random=40, tau_phon=0.6, lexicon=None, seed=0):
    """Truth entity + up to ``n_fuzzy`` inventory alternatives + ``n_random`` other entities."""
    out = []
    for ex in examples:
        truth = [" ".join(ex.tokens[s:e]) for s, e in ex.nnp_spans]
        fuzzy = [a for t in truth for a in inventory.alternatives(t, n_fuzzy, tau_phon, lexicon)]
        rng = np.random.default_rng(derive_seed(seed, "test-bias", ex.utt_id))
        out.append(ex.with_bias_set(build_test_bias_set(truth, entities, n_random, rng, fixed=fuzzy)))
    return out


def make_benchmark(name, templates, entities, config: BenchmarkConfig | None = None, lexicon=None):
    config = config or BenchmarkConfig()
    lexicon = lexicon or Lexicon.default()
    ents = {"NAME": list(entities)}
    train = make_dataset(templates, ents, config.n_train, config.synth(), lexicon, prefix=f"{name}-train")
    test = make_dataset(templates, ents, config.n_test, config.synth(), lexicon, prefix=f"{name}-test")
    corpus = hypothesis_corpus(train, lexicon, config.confusion_rate, seed=config.seed)
    inventory = mine_pairs(corpus)
    test = test_bias_sets(test, inventory, tuple(entities), config.n_fuzzy, config.n_random, config.tau_phon,
                          lexicon, config.seed)
    return Benchmark(name, train, test, inventory, tuple(entities), lexicon, config)


def contacts_benchmark(config: BenchmarkConfig | None = None, lexicon=None):
    return make_benchmark("contacts", CONTACT_TEMPLATES, CONTACT_NAMES, config, lexicon)


def songs_benchmark(config: BenchmarkConfig | None = None, lexicon=None):
    return make_benchmark("songs", SONG_TEMPLATES, SONG_TITLES, config, lexicon)


def talkto_benchmark(config: BenchmarkConfig | None = None, lexicon=None):
    return make_benchmark("talkto", TALKTO_TEMPLATES, TALKTO_APPS, config, lexicon)


DEFAULT_MODEL = {"enc_width": 64, "bias_enc_width": 48, "dec_width": 56, "attn_dim": 32, "epochs": 25,
                 "batch_size": 32, "learning_rate": 3e-3, "dtype": "float32"}


def train_scheme(bench: Benchmark, scheme, alpha_drop=0.0, seed=0, callback=None, builder_params=None,
                 **model_params):
    """Fit one recognizer on ``bench.train`` under the given training scheme.

    ``builder_params`` override bias-set builder fields such as ``n_max``.
    """
    params = {**DEFAULT_MODEL, **model_params, "frame_dim": bench.config.frame_dim}
    builder = bench.builder(scheme, alpha_drop, seed, **(builder_params or {}))
    est = CLASRecognizer(bias_builder=builder, seed=seed, **params)
    return est.fit(bench.train, callback=callback)
