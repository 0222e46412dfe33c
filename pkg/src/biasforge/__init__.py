"""Hard-negative bias-phrase training for contextual speech recognition.

Subpackages and modules:

- :mod:`biasforge.phonetics`: phoneme features, lexicon and phonetic similarity
- :mod:`biasforge.tagging`: proper-noun spans from gazetteers or sidecar files
- :mod:`biasforge.inventory`: mining fuzzy alternatives from N-best lists
- :mod:`biasforge.biasset`: per-example bias sets for each training scheme
- :mod:`biasforge.corpus`: synthetic transcripts, audio frames and hypotheses
- :mod:`biasforge.clas`: the contextual recognizer (training, decoding, checkpoints)
- :mod:`biasforge.harness`: WER, comparisons, sweeps, attention statistics, plots
"""

from .biasset import BiasPhrase, BiasSet, BiasSetBuilder, SchemeConfig, build_test_bias_set, build_training_bias_set
from .errors import BiasforgeError, ConfigError, DataFormatError, EncodingError, TrainingFault
from .inventory import FuzzyInventory, FuzzyInventoryMiner, HypothesisCorpus, fuzzy_alternatives, mine_pairs
from .phonetics import Lexicon, PhonemeInventory, phonetic_similarity, to_phonemes, weighted_edit_distance
from .tagging import ProperNounTagger, TaggedTranscript, detect_proper_nouns

__version__ = "0.1.0"

__all__ = [
    "BiasPhrase", "BiasSet", "BiasSetBuilder", "BiasforgeError", "ConfigError", "DataFormatError", "EncodingError",
    "FuzzyInventory", "FuzzyInventoryMiner", "HypothesisCorpus", "Lexicon", "PhonemeInventory", "ProperNounTagger",
    "SchemeConfig", "TaggedTranscript", "TrainingFault", "build_test_bias_set", "build_training_bias_set",
    "detect_proper_nouns", "fuzzy_alternatives", "mine_pairs", "phonetic_similarity", "to_phonemes",
    "weighted_edit_distance",
]
