"""``biasforge`` command-line entry point.

Every subcommand except ``wer`` writes into a run directory (``--run-dir``,
default ``runs/<subcommand>``) and copies its resolved configuration there as
``config.txt``.  Relative output paths are resolved inside the run directory.
Settings come from, in increasing priority: built-in defaults, the
``BIASFORGE_SEED`` environment variable (seed only), ``--config FILE``
(``key=value`` lines) and explicit flags.

Exit status: 0 on success, 1 on usage or configuration errors, 2 on missing
or malformed input data.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .errors import BiasforgeError, ConfigError, DataFormatError, EncodingError

logger = logging.getLogger("biasforge")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _int_list(text):
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


# (flag, key, type, default, help) per option group
COMMON = [
    ("--seed", "seed", int, None, "global seed (falls back to BIASFORGE_SEED, then 0)"),
    ("--threads", "threads", int, 1, "torch intra-op threads"),
    ("--run-dir", "run_dir", str, None, "output directory (default runs/<subcommand>)"),
]
SYNTH = [
    ("--frame-dim", "frame_dim", int, 16, "frame dimension"),
    ("--dur-min", "dur_min", int, 1, "minimum frames per phoneme"),
    ("--dur-max", "dur_max", int, 3, "maximum frames per phoneme"),
    ("--noise-sigma", "noise_sigma", float, 0.8, "frame noise standard deviation"),
]
SCHEME = [
    ("--scheme", "scheme", str, "nnp_fuzzy", "training scheme: vanilla, nnp, fuzzy or nnp_fuzzy"),
    ("--nmax", "n_max", int, 64, "maximum bias-set size"),
    ("--kref", "k_ref", int, 3, "maximum reference phrases per set"),
    ("--kfuzzy", "k_fuzzy", int, 3, "fuzzy alternatives per phrase"),
    ("--alpha-drop", "alpha_drop", float, 0.0, "probability of an empty bias set"),
    ("--max-ngram", "max_ngram_len", int, 3, "longest n-gram for vanilla/fuzzy phrases"),
    ("--tau-phon", "tau_phon", float, 0.6, "phonetic similarity threshold"),
    ("--fuzz-distractors", "fuzz_distractors", _bool, None, "also add alternatives of distractors"),
]
MODEL = [
    ("--enc-layers", "enc_layers", int, 2, "audio encoder layers"),
    ("--enc-width", "enc_width", int, 64, "audio encoder width"),
    ("--bias-enc-width", "bias_enc_width", int, 48, "bias encoder width"),
    ("--dec-layers", "dec_layers", int, 1, "decoder layers"),
    ("--dec-width", "dec_width", int, 56, "decoder width"),
    ("--attn-dim", "attn_dim", int, 32, "attention dimension"),
    ("--embed-dim", "embed_dim", int, 16, "label embedding size"),
    ("--epochs", "epochs", int, 25, "training epochs"),
    ("--batch-size", "batch_size", int, 32, "mini-batch size"),
    ("--lr", "learning_rate", float, 3e-3, "learning rate"),
    ("--optimizer", "optimizer", str, "adam", "adam or sgd"),
    ("--clip-norm", "clip_norm", float, 5.0, "gradient-norm clipping threshold"),
    ("--frame-noise", "frame_noise", float, 0.0, "std of fresh Gaussian noise added to frames at each update"),
    ("--dtype", "dtype", str, "float32", "training precision: float32 or float64"),
]

COMMANDS = {
    "gen-data": {
        "help": "generate a synthetic benchmark or a dataset from templates",
        "options": [
            ("--benchmark", "benchmark", str, None, "contacts, songs or talkto"),
            ("--templates", "templates", str, None, "template file (one per line, <NAME> slots)"),
            ("--entities", "entities", str, None, "entity file (one per line)"),
            ("--size", "size", int, 2000, "training utterances"),
            ("--test-size", "test_size", int, 200, "test utterances (benchmark mode)"),
            ("--fuzzy", "n_fuzzy", int, 9, "fuzzy alternatives per test truth phrase"),
            ("--distractors", "n_random", int, 40, "random distractors per test bias set"),
            ("--confusion-rate", "confusion_rate", float, 0.5, "hypothesis confusion probability"),
            ("--tau-phon", "tau_phon", float, 0.6, "phonetic similarity threshold"),
            ("--prefix", "prefix", str, "utt", "utterance id prefix (template mode)"),
        ] + SYNTH,
    },
    "build-inventory": {
        "help": "mine a fuzzy inventory from a hypothesis corpus",
        "options": [
            ("--corpus", "corpus", str, None, "hypothesis corpus: utt_id<TAB>hyp1<TAB>hyp2..."),
            ("--max-ngram", "max_ngram_len", int, 3, "longest differing span"),
            ("--out", "out", str, "inventory.tsv", "inventory file"),
        ],
    },
    "tag": {
        "help": "tag proper-noun spans and write a sidecar file",
        "options": [
            ("--input", "input", str, None, "transcripts: 'utt_id<TAB>text' lines or a dataset .jsonl"),
            ("--gazetteer", "gazetteer", str, "default", "gazetteer file or 'default'"),
            ("--out", "out", str, "tags.tsv", "sidecar file"),
        ],
    },
    "make-bias-sets": {
        "help": "sample training bias sets, or attach test bias sets to a dataset",
        "options": [
            ("--data", "data", str, None, "dataset .jsonl"),
            ("--inventory", "inventory", str, None, "fuzzy inventory"),
            ("--epoch", "epoch", int, 0, "epoch index for training sets"),
            ("--test", "test", _bool, False, "build test sets: truth + fuzzy + random distractors"),
            ("--distractors", "n_random", int, 40, "random distractors per test set"),
            ("--fuzzy", "n_fuzzy", int, 9, "fuzzy alternatives per test truth phrase"),
            ("--out", "out", str, "bias_sets.jsonl", "output file"),
        ] + SCHEME,
    },
    "train": {
        "help": "train a recognizer under one bias-set scheme",
        "options": [
            ("--data", "data", str, None, "training dataset .jsonl"),
            ("--inventory", "inventory", str, None, "fuzzy inventory (fuzzy schemes)"),
            ("--out", "out", str, "model.ckpt", "checkpoint file"),
            ("--log", "log", str, "train_log.csv", "training log"),
        ] + SCHEME + MODEL,
    },
    "eval": {
        "help": "WER of one or more checkpoints on test sets",
        "options": [
            ("--model", "model", str, None, "checkpoint, or NAME=PATH; comma-separated for several"),
            ("--data", "data", str, None, "test .jsonl, or NAME=PATH; comma-separated for several"),
            ("--no-bias", "no_bias", _bool, False, "also evaluate with empty bias sets"),
            ("--beam-width", "beam_width", int, 1, "beam width (1 = greedy)"),
            ("--out", "out", str, "report.csv", "report file"),
        ],
    },
    "sweep": {
        "help": "WER against the number of random distractors",
        "options": [
            ("--model", "model", str, None, "checkpoint, or NAME=PATH; comma-separated for several"),
            ("--data", "data", str, None, "test .jsonl"),
            ("--points", "points", _int_list, [0, 5, 10, 20, 40], "ascending distractor counts"),
            ("--out", "out", str, "sweep.csv", "curve file"),
        ],
    },
    "attention": {
        "help": "attention statistics with one truth phrase and its fuzzy alternatives",
        "options": [
            ("--model", "model", str, None, "checkpoint"),
            ("--data", "data", str, None, "test .jsonl"),
            ("--inventory", "inventory", str, None, "fuzzy inventory"),
            ("--fuzzy", "n_fuzzy", int, 9, "fuzzy alternatives per truth phrase"),
            ("--tau-phon", "tau_phon", float, 0.6, "phonetic similarity threshold"),
            ("--out", "out", str, "attention.csv", "per-utterance metrics"),
            ("--traces", "traces", str, "traces.jsonl", "trace dump"),
        ],
    },
    "plot": {
        "help": "render report, sweep and attention traces as SVG",
        "options": [
            ("--report", "report", str, None, "report CSV"),
            ("--sweep", "sweep", str, None, "sweep CSV"),
            ("--traces", "traces", str, None, "trace dump (.jsonl)"),
            ("--limit", "limit", int, 5, "maximum number of heatmaps"),
        ],
    },
}


def build_parser():
    parser = _Parser(prog="biasforge", description="Hard-negative bias-phrase training toolkit.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name, spec in COMMANDS.items():
        p = sub.add_parser(name, help=spec["help"], description=spec["help"])
        p.add_argument("--config", default=None, help="key=value settings file; flags override it")
        for flag, key, typ, default, text in COMMON + spec["options"]:
            show = "" if default is None else f" (default {default})"
            if typ is _bool and default is False:
                p.add_argument(flag, dest=key, action="store_true", default=argparse.SUPPRESS, help=text)
            else:
                p.add_argument(flag, dest=key, type=typ, default=argparse.SUPPRESS, help=text + show)
    w = sub.add_parser("wer", help="word error rate of a hypothesis file against a reference file")
    w.add_argument("--ref", required=True)
    w.add_argument("--hyp", required=True)
    return parser


def _read_config(path, known):
    values = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise FileNotFoundError(f"{path}: {exc.strerror}") from None
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if not sep:
                raise DataFormatError("expected key=value", path, lineno)
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = value.strip()
    return values


def resolve_config(command, args):
    """Merge defaults, BIASFORGE_SEED, the config file and explicit flags."""
    options = {key: (typ, default) for _, key, typ, default, _ in COMMON + COMMANDS[command]["options"]}
    cfg = {key: default for key, (_, default) in options.items()}
    env_seed = os.environ.get("BIASFORGE_SEED")
    if env_seed is not None:
        try:
            cfg["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"BIASFORGE_SEED must be an integer, got {env_seed!r}") from None
    if args.config:
        for key, raw in _read_config(args.config, options).items():
            typ = options[key][0]
            try:
                cfg[key] = None if raw == "" else typ(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from None
    for key in options:
        if key in vars(args):
            cfg[key] = getattr(args, key)
    if cfg["seed"] is None:
        cfg["seed"] = 0
    if cfg["run_dir"] is None:
        cfg["run_dir"] = os.path.join("runs", command)
    if cfg["threads"] < 1:
        raise ConfigError("--threads must be >= 1")
    return cfg


def _format_value(v):
    if isinstance(v, list):
        return ",".join(map(str, v))
    return "" if v is None else str(v)


def write_run_config(command, cfg):
    os.makedirs(cfg["run_dir"], exist_ok=True)
    path = os.path.join(cfg["run_dir"], "config.txt")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"command={command}\n")
        for key in sorted(cfg):
            fh.write(f"{key}={_format_value(cfg[key])}\n")
    return path


def _out(cfg, key):
    path = cfg[key]
    return path if os.path.isabs(path) else os.path.join(cfg["run_dir"], path)


def _need(cfg, *keys):
    for key in keys:
        if cfg.get(key) in (None, ""):
            raise ConfigError(f"missing required setting --{key.replace('_', '-')}")


def _named(spec, default_prefix):
    """Parse ``NAME=PATH,...`` (names default to the file stem) into an ordered mapping."""
    out = {}
    for item in filter(None, spec.split(",")):
        name, sep, path = item.partition("=")
        if not sep:
            name, path = os.path.splitext(os.path.basename(item))[0] or default_prefix, item
        if name in out:
            raise ConfigError(f"duplicate name {name!r}")
        out[name] = path
    return out


def _check_file(path):
    if not os.path.isfile(path):
        raise FileNotFoundError(f"{path}: no such file")
    return path


# ---------------------------------------------------------------- commands

def cmd_gen_data(cfg):
    from .corpus import SynthConfig, dataset_stats, hypothesis_corpus, make_dataset, read_lines, write_dataset
    from .harness.benchmark import BenchmarkConfig, contacts_benchmark, songs_benchmark, talkto_benchmark
    from .tagging import write_sidecar

    run = cfg["run_dir"]
    if cfg["benchmark"]:
        recipes = {"contacts": contacts_benchmark, "songs": songs_benchmark, "talkto": talkto_benchmark}
        if cfg["benchmark"] not in recipes:
            raise ConfigError(f"unknown benchmark {cfg['benchmark']!r}; choose from {sorted(recipes)}")
        bcfg = BenchmarkConfig(cfg["size"], cfg["test_size"], cfg["n_fuzzy"], cfg["n_random"], cfg["confusion_rate"],
                               cfg["tau_phon"], cfg["frame_dim"], cfg["dur_min"], cfg["dur_max"], cfg["noise_sigma"],
                               cfg["seed"])
        bench = recipes[cfg["benchmark"]](bcfg)
        write_dataset(os.path.join(run, "train.jsonl"), bench.train)
        write_dataset(os.path.join(run, "test.jsonl"), bench.test)
        write_dataset(os.path.join(run, "test_nobias.jsonl"), bench.bias_free())
        hypothesis_corpus(bench.train, bench.lexicon, bcfg.confusion_rate, bcfg.seed).to_file(
            os.path.join(run, "hypotheses.tsv"))
        bench.inventory.to_file(os.path.join(run, "inventory.tsv"))
        examples = bench.train
    else:
        _need(cfg, "templates", "entities")
        synth = SynthConfig(cfg["frame_dim"], cfg["dur_min"], cfg["dur_max"], cfg["noise_sigma"], cfg["seed"])
        examples = make_dataset(read_lines(_check_file(cfg["templates"])),
                                {"NAME": read_lines(_check_file(cfg["entities"]))}, cfg["size"], synth,
                                prefix=cfg["prefix"])
        write_dataset(os.path.join(run, "train.jsonl"), examples)
        hypothesis_corpus(examples, None, cfg["confusion_rate"], cfg["seed"]).to_file(
            os.path.join(run, "hypotheses.tsv"))
    write_sidecar(os.path.join(run, "tags.tsv"), [(ex.utt_id, ex.nnp_spans) for ex in examples])
    with open(os.path.join(run, "stats.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(dataset_stats(examples), fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(examples)} utterances to {run}")


def cmd_build_inventory(cfg):
    from .inventory import HypothesisCorpus, mine_pairs

    _need(cfg, "corpus")
    inv = mine_pairs(HypothesisCorpus.from_file(_check_file(cfg["corpus"])), cfg["max_ngram_len"])
    out = _out(cfg, "out")
    inv.to_file(out)
    print(f"{len(inv)} phrases -> {out}")


def _read_transcripts(path):
    from .corpus import read_dataset

    if path.endswith(".jsonl"):
        return [(ex.utt_id, ex.transcript) for ex in read_dataset(path)]
    items = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            utt_id, sep, text = line.partition("\t")
            if not sep or not utt_id.strip():
                raise DataFormatError("expected 'utt_id<TAB>transcript'", path, lineno)
            items.append((utt_id, text))
    return items


def cmd_tag(cfg):
    from .tagging import ProperNounTagger, write_sidecar

    _need(cfg, "input")
    gaz = cfg["gazetteer"]
    if gaz != "default":
        _check_file(gaz)
    tagger = ProperNounTagger(gazetteer=gaz).fit()
    items = _read_transcripts(_check_file(cfg["input"]))
    tagged = [(u, tagger.tag(t).nnp_spans) for u, t in items]
    out = _out(cfg, "out")
    write_sidecar(out, tagged)
    print(f"tagged {len(tagged)} utterances -> {out}")


def _scheme_kwargs(cfg):
    return {k: cfg[k] for k in ("scheme", "n_max", "k_ref", "k_fuzzy", "alpha_drop", "max_ngram_len", "tau_phon",
                                "fuzz_distractors")}


def _load_inventory(cfg, required):
    from .inventory import FuzzyInventory

    if cfg.get("inventory"):
        return FuzzyInventory.from_file(_check_file(cfg["inventory"]))
    if required:
        raise ConfigError("this scheme needs --inventory")
    return None


def cmd_make_bias_sets(cfg):
    from .biasset import BiasSetBuilder
    from .corpus import read_dataset, write_dataset
    from .harness.benchmark import test_bias_sets

    _need(cfg, "data")
    examples = read_dataset(_check_file(cfg["data"]))
    out = _out(cfg, "out")
    if cfg["test"]:
        inv = _load_inventory(cfg, True)
        entities = tuple(sorted({" ".join(ex.tokens[s:e]) for ex in examples for s, e in ex.nnp_spans}))
        write_dataset(out, test_bias_sets(examples, inv, entities, cfg["n_fuzzy"], cfg["n_random"], cfg["tau_phon"],
                                          seed=cfg["seed"]))
    else:
        kw = _scheme_kwargs(cfg)
        inv = _load_inventory(cfg, kw["scheme"] in ("fuzzy", "nnp_fuzzy"))
        builder = BiasSetBuilder(**kw, seed=cfg["seed"], inventory=inv).fit(examples)
        sets = builder.transform(examples, epoch=cfg["epoch"])
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            for ex, b in zip(examples, sets):
                fh.write(json.dumps({"utt_id": ex.utt_id, "bias_set": b.to_record()}, separators=(",", ":")) + "\n")
    print(f"bias sets for {len(examples)} utterances -> {out}")


def cmd_train(cfg):
    from .biasset import BiasSetBuilder
    from .clas import CLASRecognizer, write_log
    from .corpus import read_dataset

    _need(cfg, "data")
    examples = read_dataset(_check_file(cfg["data"]))
    if not examples:
        raise DataFormatError("training dataset is empty", cfg["data"])
    if any(ex.frames is None for ex in examples):
        raise DataFormatError("training dataset has utterances without frames", cfg["data"])
    kw = _scheme_kwargs(cfg)
    inv = _load_inventory(cfg, kw["scheme"] in ("fuzzy", "nnp_fuzzy"))
    builder = BiasSetBuilder(**kw, seed=cfg["seed"], inventory=inv)
    frame_dim = int(examples[0].frames.shape[1])
    model_keys = [m[1] for m in MODEL]
    est = CLASRecognizer(frame_dim=frame_dim, bias_builder=builder, seed=cfg["seed"],
                         **{k: cfg[k] for k in model_keys})
    est.fit(examples)
    out = _out(cfg, "out")
    est.save(out, extra={"scheme": kw, "seed": cfg["seed"]})
    write_log(_out(cfg, "log"), est.training_log_)
    print(f"final loss {est.training_log_[-1].loss:.4f}; checkpoint -> {out}")


def _load_models(spec):
    from .clas import CLASRecognizer

    return {name: CLASRecognizer.load(_check_file(path)) for name, path in _named(spec, "model").items()}


def cmd_eval(cfg):
    from .corpus import read_dataset
    from .harness import run_comparison

    _need(cfg, "model", "data")
    models = _load_models(cfg["model"])
    for m in models.values():
        m.beam_width = cfg["beam_width"]
    sets = {name: read_dataset(_check_file(p)) for name, p in _named(cfg["data"], "test").items()}
    if cfg["no_bias"]:
        from .biasset import BiasSet

        for name in list(sets):
            sets[f"{name}_nobias"] = [ex.with_bias_set(BiasSet()) for ex in sets[name]]
    report = run_comparison(models, sets)
    out = _out(cfg, "out")
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(report.to_csv())
    for r in report.rows:
        print(f"{r['model']}\t{r['test_set']}\t{r['wer']:.4f}")


def cmd_sweep(cfg):
    from .corpus import read_dataset
    from .harness import EvalReport, distractor_sweep

    _need(cfg, "model", "data")
    models = _load_models(cfg["model"])
    examples = read_dataset(_check_file(cfg["data"]))
    pool = sorted({" ".join(ex.tokens[s:e]) for ex in examples for s, e in ex.nnp_spans})
    report = EvalReport()
    for name, model in models.items():
        report.sweeps[name] = distractor_sweep(model, examples, cfg["points"], pool, cfg["seed"])
    out = _out(cfg, "out")
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(report.sweep_csv())
    for name, curve in report.sweeps.items():
        print(name, " ".join(f"{n}:{w:.4f}" for n, w in curve))


def cmd_attention(cfg):
    from .corpus import read_dataset
    from .harness import attention_metrics, write_traces

    _need(cfg, "model", "data", "inventory")
    (name, model), = _load_models(cfg["model"]).items()
    examples = [ex for ex in read_dataset(_check_file(cfg["data"])) if ex.nnp_spans]
    inv = _load_inventory(cfg, True)
    metrics, traces = attention_metrics(model, examples, inventory=inv, n_fuzzy=cfg["n_fuzzy"],
                                        tau_phon=cfg["tau_phon"], seed=cfg["seed"])
    with open(_out(cfg, "out"), "w", encoding="utf-8", newline="") as fh:
        fh.write(metrics.to_csv())
    write_traces(_out(cfg, "traces"), [ex.utt_id for ex in examples], traces)
    for key, value in metrics.summary().items():
        print(f"{key}\t{value}")


def cmd_plot(cfg):
    from .harness import EvalReport, emit_plots, read_traces

    if not (cfg["report"] or cfg["sweep"] or cfg["traces"]):
        raise ConfigError("nothing to plot: give --report, --sweep and/or --traces")
    report = None
    if cfg["report"] or cfg["sweep"]:
        text = sweep_text = None
        if cfg["report"]:
            with open(_check_file(cfg["report"]), encoding="utf-8") as fh:
                text = fh.read()
        if cfg["sweep"]:
            with open(_check_file(cfg["sweep"]), encoding="utf-8") as fh:
                sweep_text = fh.read()
        report = EvalReport.from_csv(text, sweep_text) if text else EvalReport.from_csv(
            "model,test_set,wer,substitutions,deletions,insertions,ref_words,utterances\n", sweep_text)
    traces = read_traces(_check_file(cfg["traces"]))[: cfg["limit"]] if cfg["traces"] else None
    for path in emit_plots(cfg["run_dir"], report, traces):
        print(path)


def cmd_wer(args):
    from .harness.metrics import corpus_wer

    refs, hyps = [], []
    for path, dest in ((args.ref, refs), (args.hyp, hyps)):
        with open(_check_file(path), encoding="utf-8") as fh:
            dest.extend(line.rstrip("\n") for line in fh)
    if len(refs) != len(hyps):
        raise DataFormatError(f"{len(refs)} reference lines but {len(hyps)} hypothesis lines", args.hyp)
    for i, ref in enumerate(refs, 1):
        if not ref.split():
            raise DataFormatError("empty reference line", args.ref, i)
    print(corpus_wer(refs, hyps)["wer"])


HANDLERS = {
    "gen-data": cmd_gen_data, "build-inventory": cmd_build_inventory, "tag": cmd_tag,
    "make-bias-sets": cmd_make_bias_sets, "train": cmd_train, "eval": cmd_eval, "sweep": cmd_sweep,
    "attention": cmd_attention, "plot": cmd_plot,
}


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        if args.command == "wer":
            cmd_wer(args)
            return EXIT_OK
        cfg = resolve_config(args.command, args)
        import torch

        torch.set_num_threads(cfg["threads"])
        write_run_config(args.command, cfg)
        HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"biasforge: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, EncodingError, FileNotFoundError) as exc:
        print(f"biasforge: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BiasforgeError as exc:
        print(f"biasforge: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
