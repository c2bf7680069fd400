"""Command-line surface.

Subcommands compose the library into the full pipeline:

    synth     write a synthetic benchmark (dataset, corpus, labels, templates)
    encode    template-fill a dataset and embed it with the toy encoder
    pretrain  build zero-shot prototypes from keyword sentences
    train     run a k-shot episode and save a checkpoint
    eval      score checkpoints on held-out data, emit a JSON report
    ablate    sweep the canonical loss combinations on one episode
    params    print trainable-parameter counts
    dump      export transformed embeddings + prototypes for plotting

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
Logging level comes from PROTOVERB_LOG (error|warn|info|debug).
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import os
import sys
import time

import numpy as np

from .core import EmbeddingBatch, LabelSpace, LossWeights, MaskEmbedding, VerbalizerModel
from .encode import EmbeddingStore, EncoderSpec, encode_text, load_embeddings, save_embeddings
from .episodes import (
    EpisodeSpec,
    SynthSpec,
    TextDataset,
    k_shot_sample,
    load_dataset,
    parse_schema,
    sample_k_per_class,
    synth_generate,
)
from .errors import DataError, NumericalError, UsageError
from .optim import (
    OptimConfig,
    atomic_write_text,
    init_model,
    load_checkpoint,
    pretrain_prototypes,
    save_checkpoint,
    train,
)
from .report import (
    CANONICAL_ABLATION,
    RunRecord,
    RunReport,
    _round_floats,
    count_params,
    dump_embeddings,
    evaluate_model,
)
from .templating import (
    PretrainSampleSpec,
    Template,
    fill_pretrain_template,
    fill_template,
    load_label_space,
    load_templates,
    match_word,
    sample_keyword_sentences,
)

log = logging.getLogger("protoverb")

DEFAULT_DIM_M = 256
DEFAULT_DIM_D = 128
DEFAULT_Q = 30
DEFAULT_LR = {"toy": 1e-2, "precomputed": 3e-5}

BUILTIN_TEMPLATES = [
    "[SENTENCE] This topic is about [MASK].",
    "A [MASK] story: [SENTENCE]",
    "[ Category : [MASK] ] [SENTENCE]",
    "[SENTENCE] In summary , the subject was [MASK].",
]


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; remap to our usage code."""

    def error(self, message):
        raise UsageError(message)


def _seed_list(text: str) -> list[int]:
    pieces = [p.strip() for p in text.split(",") if p.strip()]
    if not pieces:
        raise UsageError(f"--seed: no seeds in {text!r}")
    try:
        return [int(p) for p in pieces]
    except ValueError:
        raise UsageError(f"--seed: cannot parse {text!r} as integers") from None


def _path_list(text: str) -> list[str]:
    pieces = [p.strip() for p in text.split(",") if p.strip()]
    if not pieces:
        raise UsageError(f"--checkpoint: no paths in {text!r}")
    return pieces


def _setup_logging():
    levels = {
        "error": logging.ERROR,
        "warn": logging.WARNING,
        "info": logging.INFO,
        "debug": logging.DEBUG,
    }
    raw = os.environ.get("PROTOVERB_LOG", "warn").strip().lower()
    if raw not in levels:
        raise UsageError(
            f"PROTOVERB_LOG must be one of error|warn|info|debug, got {raw!r}"
        )
    logging.basicConfig(
        level=levels[raw], stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


# ---------------------------------------------------------------------------
# shared plumbing


def _encoder_spec(args, echo: dict | None = None) -> EncoderSpec:
    """Toy encoder spec from flags; a warm-start checkpoint's recorded encoder
    fills anything the user left unspecified, and explicit contradictions are
    rejected so a checkpoint is never scored in the wrong embedding space."""
    base = {"m": DEFAULT_DIM_M, "seed": 0, "max_tokens": 512}
    if echo and echo.get("kind") == "toy":
        base = {
            "m": int(echo["m"]),
            "seed": int(echo.get("seed", 0)),
            "max_tokens": int(echo.get("max_tokens", 512)),
        }
        for flag, attr, key in (
            ("--dim-m", "dim_m", "m"),
            ("--encoder-seed", "encoder_seed", "seed"),
            ("--max-tokens", "max_tokens", "max_tokens"),
        ):
            given = getattr(args, attr)
            if given is not None and given != base[key]:
                raise UsageError(
                    f"{flag} {given} contradicts the checkpoint's encoder "
                    f"({key}={base[key]})"
                )
    return EncoderSpec(
        kind="toy",
        m=args.dim_m if args.dim_m is not None else base["m"],
        seed=args.encoder_seed if args.encoder_seed is not None else base["seed"],
        max_tokens=args.max_tokens if args.max_tokens is not None else base["max_tokens"],
    )


def _optim_config(args, seed: int, encoder_kind: str) -> OptimConfig:
    lr = args.lr if args.lr is not None else DEFAULT_LR[encoder_kind]
    return OptimConfig(
        lr=lr,
        weight_decay=args.weight_decay,
        epochs=args.epochs if args.epochs is not None else 10,
        batch_size=args.batch_size if args.batch_size is not None else 8,
        seed=seed,
    )


def _weights(args) -> LossWeights:
    return LossWeights(args.lambda1, args.lambda2, args.lambda3)


def _pick_template(path: str, index: int) -> Template:
    templates = load_templates(path)
    if not 0 <= index < len(templates):
        raise UsageError(
            f"--template-index {index} out of range, {path} has {len(templates)} templates"
        )
    return templates[index]


def _encode_texts(spec: EncoderSpec, prompted: list[str]) -> np.ndarray:
    vectors = np.empty((len(prompted), spec.m), dtype=np.float64)
    for i, text in enumerate(prompted):
        vectors[i] = encode_text(spec, text)
    return vectors


def _encode_dataset(
    spec: EncoderSpec, ds: TextDataset, template: Template
) -> tuple[list[str], EmbeddingBatch]:
    prompted = [fill_template(template, t) for t in ds.texts]
    vectors = _encode_texts(spec, prompted)
    return prompted, EmbeddingBatch(vectors=vectors, labels=np.asarray(ds.labels))

def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _checkpoint_path(out: str, seeds: list[int], seed: int) -> str:
    """Single seed writes --out verbatim unless it is a directory; a seed
    list makes --out a directory of checkpoint_seed{S}.json files."""
    if len(seeds) == 1 and not os.path.isdir(out):
        return out
    if os.path.isfile(out):
        raise UsageError(f"--out {out} must be a directory for a --seed list")
    os.makedirs(out, exist_ok=True)
    return os.path.join(out, f"checkpoint_seed{seed}.json")


def _require(args, names: list[str], context: str):
    missing = [n for n in names if getattr(args, n.lstrip("-").replace("-", "_")) is None]
    if missing:
        raise UsageError(f"{context} requires {', '.join(missing)}")


def _forbid(args, names: list[str], context: str):
    present = [n for n in names if getattr(args, n.lstrip("-").replace("-", "_")) is not None]
    if present:
        raise UsageError(f"{', '.join(present)} cannot be combined with {context}")


def _labeled_store_batch(path: str) -> tuple[EmbeddingStore, EmbeddingBatch]:
    store = load_embeddings(path)
    vectors, labels = store.labeled_matrix()
    return store, EmbeddingBatch(vectors=vectors, labels=labels)


def _emit_sidecars(args, prompted: list[str], labels: list[int]):
    if args.emit_texts:
        atomic_write_text(args.emit_texts, "\n".join(prompted) + "\n")
        log.info("wrote %d prompted texts to %s", len(prompted), args.emit_texts)
    if args.emit_labels:
        atomic_write_text(args.emit_labels, "\n".join(str(y) for y in labels) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_classes=args.classes,
        train_per_class=args.train_per_class,
        test_per_class=args.test_per_class,
        noise_rate=args.noise,
        seed=args.seed,
    )
    train_ds, test_ds, corpus, labels = synth_generate(spec)
    os.makedirs(args.out, exist_ok=True)

    def write_csv(name: str, ds: TextDataset):
        buf = io.StringIO()
        writer = csv.writer(buf)
        for y, text in zip(ds.labels, ds.texts):
            writer.writerow([y, text])
        atomic_write_text(os.path.join(args.out, name), buf.getvalue())

    write_csv("train.csv", train_ds)
    write_csv("test.csv", test_ds)
    atomic_write_text(os.path.join(args.out, "corpus.txt"), "\n".join(corpus) + "\n")
    atomic_write_text(os.path.join(args.out, "labels.txt"), "\n".join(labels.names) + "\n")
    atomic_write_text(
        os.path.join(args.out, "label_words.txt"),
        "\n".join(",".join(ws) for ws in labels.label_words) + "\n",
    )
    atomic_write_text(
        os.path.join(args.out, "templates.txt"), "\n".join(BUILTIN_TEMPLATES) + "\n"
    )
    log.info(
        "synthetic benchmark in %s: %d train, %d test, %d corpus lines",
        args.out, len(train_ds), len(test_ds), len(corpus),
    )
    return 0


def cmd_encode(args) -> int:
    if args.encoder != "toy":
        raise UsageError(
            "--encoder precomputed makes no sense for encode; "
            "precomputed embeddings already exist"
        )
    labels = load_label_space(args.labels, args.label_words)
    ds = load_dataset(args.dataset, parse_schema(args.schema), labels, split=_stem(args.dataset))
    template = _pick_template(args.template_file, args.template_index)
    spec = _encoder_spec(args)
    prompted, batch = _encode_dataset(spec, ds, template)
    records = [
        MaskEmbedding(id=f"{ds.split}:{i}", vector=batch.vectors[i], label=ds.labels[i])
        for i in range(len(ds))
    ]
    store = EmbeddingStore(
        m=spec.m, source=f"toy:m={spec.m},seed={spec.seed}", records=records
    )
    save_embeddings(store, args.out)
    _emit_sidecars(args, prompted, ds.labels)
    log.info("encoded %d rows of %s into %s", len(ds), args.dataset, args.out)
    return 0


def _encoder_echo(spec: EncoderSpec | None, store: EmbeddingStore | None) -> dict:
    if spec is not None:
        return {"kind": "toy", "m": spec.m, "seed": spec.seed, "max_tokens": spec.max_tokens}
    return {"kind": "precomputed", "m": store.m, "source": store.source}


def cmd_pretrain(args) -> int:
    labels = load_label_space(args.labels, args.label_words)
    labels.require_words()
    seeds = args.seed

    if args.encoder == "precomputed" and args.embeddings is None:
        # emit-only mode: hand template-filled texts to an external encoder
        _forbid(args, ["--out"], "emit-only pretrain (no model is produced)")
        if not args.emit_texts:
            raise UsageError(
                "pretrain with --encoder precomputed needs --embeddings to train "
                "or --emit-texts to export prompts"
            )
        if len(seeds) != 1:
            raise UsageError("--emit-texts needs a single --seed")
        _require(args, ["--corpus"], "pretrain prompt emission")
        prompted, pseudo = _build_pretrain_prompts(args, labels, seeds[0])
        _emit_sidecars(args, prompted, pseudo)
        return 0

    _require(args, ["--out"], "pretrain")
    if args.encoder == "precomputed":
        _forbid(args, ["--corpus", "--q", "--emit-texts", "--emit-labels"],
                "pretraining from --embeddings")
        store, batch = _labeled_store_batch(args.embeddings)
        if args.dim_m is not None and args.dim_m != store.m:
            raise UsageError(
                f"--dim-m {args.dim_m} contradicts {args.embeddings} header m={store.m}"
            )
        if int(batch.labels.max()) >= labels.k:
            raise DataError(
                f"{args.embeddings}: pseudo-label {int(batch.labels.max())} "
                f"out of range for {labels.k} labels"
            )
        for seed in seeds:
            class_vectors = [
                batch.vectors[batch.labels == y] for y in range(labels.k)
            ]
            _pretrain_one(args, labels, seed, seeds, class_vectors,
                          encoder_echo=_encoder_echo(None, store))
        return 0

    _require(args, ["--corpus"], "pretrain with the toy encoder")
    _forbid(args, ["--embeddings"], "--encoder toy")
    spec = _encoder_spec(args)
    if len(seeds) > 1 and (args.emit_texts or args.emit_labels):
        raise UsageError("--emit-texts/--emit-labels need a single --seed")
    for seed in seeds:
        prompted, pseudo = _build_pretrain_prompts(args, labels, seed)
        vectors = _encode_texts(spec, prompted)
        pseudo_arr = np.asarray(pseudo)
        class_vectors = [vectors[pseudo_arr == y] for y in range(labels.k)]
        _pretrain_one(args, labels, seed, seeds, class_vectors,
                      encoder_echo=_encoder_echo(spec, None))
        _emit_sidecars(args, prompted, pseudo)
    return 0


def _build_pretrain_prompts(
    args, labels: LabelSpace, seed: int
) -> tuple[list[str], list[int]]:
    q = args.q if args.q is not None else DEFAULT_Q
    sample_spec = PretrainSampleSpec(q=q, corpus_path=args.corpus)
    per_class = sample_keyword_sentences(sample_spec, labels, seed)
    prompted: list[str] = []
    pseudo: list[int] = []
    for y, sentences in enumerate(per_class):
        for sentence in sentences:
            word = match_word(labels.label_words[y], sentence)
            prompted.append(fill_pretrain_template(sentence, word))
            pseudo.append(y)
    return prompted, pseudo


def _pretrain_one(args, labels, seed, seeds, class_vectors, encoder_echo):
    m = class_vectors[0].shape[1]
    d = args.dim_d if args.dim_d is not None else DEFAULT_DIM_D
    cfg = _optim_config(args, seed, args.encoder)
    model = init_model(m, d, labels.k, seed)
    trained = pretrain_prototypes(class_vectors, model, _weights(args), cfg,
                                  names=labels.names)
    echo = {
        "command": "pretrain",
        "seed": seed,
        "k": 0,
        "q": args.q if args.q is not None else DEFAULT_Q,
        "template_index": -1,
        "encoder": encoder_echo,
        "lambda": list(_weights(args).as_tuple()),
        "lr": cfg.lr,
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "weight_decay": cfg.weight_decay,
    }
    path = _checkpoint_path(args.out, seeds, seed)
    save_checkpoint(path, trained, labels.names, echo)
    log.info("pretrained checkpoint (seed %d) -> %s", seed, path)


def cmd_train(args) -> int:
    if args.k == 0:
        raise UsageError(
            "--k 0 is the zero-shot setting; use `pretrain` + `eval` instead of train"
        )
    labels = load_label_space(args.labels, args.label_words)
    seeds = args.seed
    weights = _weights(args)

    warm = None
    if args.checkpoint is not None:
        warm = load_checkpoint(args.checkpoint)
        if args.dim_d is not None and warm[0].d != args.dim_d:
            raise UsageError(
                f"--dim-d {args.dim_d} contradicts checkpoint {args.checkpoint} "
                f"(d={warm[0].d})"
            )
        if warm[0].k != labels.k:
            raise DataError(
                f"checkpoint {args.checkpoint} has K={warm[0].k} prototypes, "
                f"{args.labels} lists {labels.k} labels"
            )

    if args.encoder == "precomputed":
        _require(args, ["--embeddings"], "--encoder precomputed")
        _forbid(args, ["--dataset", "--template-file"], "--encoder precomputed")
        store, pool = _labeled_store_batch(args.embeddings)
        if args.dim_m is not None and args.dim_m != store.m:
            raise UsageError(
                f"--dim-m {args.dim_m} contradicts {args.embeddings} header m={store.m}"
            )
        encoder_echo = _encoder_echo(None, store)
        template_index = -1

        def episode_batch(seed: int) -> EmbeddingBatch:
            idx = sample_k_per_class(pool.labels, args.k, labels.k, seed)
            return EmbeddingBatch(vectors=pool.vectors[idx], labels=pool.labels[idx])

    else:
        _require(args, ["--dataset", "--template-file"], "--encoder toy")
        _forbid(args, ["--embeddings"], "--encoder toy")
        ds = load_dataset(args.dataset, parse_schema(args.schema), labels,
                          split=_stem(args.dataset))
        template = _pick_template(args.template_file, args.template_index)
        spec = _encoder_spec(args, echo=warm[2].get("encoder") if warm else None)
        encoder_echo = _encoder_echo(spec, None)
        template_index = args.template_index

        def episode_batch(seed: int) -> EmbeddingBatch:
            episode = k_shot_sample(ds, EpisodeSpec(args.k, seed, args.template_index))
            _, batch = _encode_dataset(spec, episode, template)
            return batch

    for seed in seeds:
        batch = episode_batch(seed)
        if warm is not None:
            if warm[0].m != batch.m:
                raise DataError(
                    f"checkpoint {args.checkpoint} expects m={warm[0].m}, "
                    f"episode embeddings have m={batch.m}"
                )
            model = copy.deepcopy(warm[0])
        else:
            d = args.dim_d if args.dim_d is not None else DEFAULT_DIM_D
            model = init_model(batch.m, d, labels.k, seed)
        cfg = _optim_config(args, seed, args.encoder)
        trained, trace = train(batch, model, weights, cfg)
        echo = {
            "command": "train",
            "seed": seed,
            "k": args.k,
            "template_index": template_index,
            "encoder": encoder_echo,
            "lambda": list(weights.as_tuple()),
            "lr": cfg.lr,
            "epochs": cfg.epochs,
            "batch_size": cfg.batch_size,
            "weight_decay": cfg.weight_decay,
            "warm_start": args.checkpoint,
        }
        path = _checkpoint_path(args.out, seeds, seed)
        save_checkpoint(path, trained, labels.names, echo)
        log.info(
            "trained k=%d seed=%d, final batch loss %.4f -> %s",
            args.k, seed, trace[-1] if trace else float("nan"), path,
        )
    return 0


def _eval_batch_for(args, model: VerbalizerModel, config: dict) -> EmbeddingBatch:
    if args.embeddings is not None:
        _forbid(args, ["--dataset", "--template-file"], "--embeddings")
        store, batch = _labeled_store_batch(args.embeddings)
        if store.m != model.m:
            raise DataError(
                f"{args.embeddings} has m={store.m}, checkpoint expects m={model.m}"
            )
        return batch
    _require(args, ["--dataset", "--labels", "--template-file"],
             "eval without --embeddings")
    encoder = config.get("encoder") or {}
    if encoder.get("kind") != "toy":
        raise UsageError(
            "checkpoint was not trained with the toy encoder; "
            "pass --embeddings with precomputed test vectors"
        )
    spec = EncoderSpec(
        kind="toy",
        m=int(encoder["m"]),
        seed=int(encoder.get("seed", 0)),
        max_tokens=int(encoder.get("max_tokens", 512)),
    )
    labels = load_label_space(args.labels, args.label_words)
    if labels.k != model.k:
        raise DataError(
            f"{args.labels} lists {labels.k} labels, checkpoint has K={model.k}"
        )
    ds = load_dataset(args.dataset, parse_schema(args.schema), labels,
                      split=_stem(args.dataset))
    template = _pick_template(args.template_file, args.template_index)
    _, batch = _encode_dataset(spec, ds, template)
    return batch


def cmd_eval(args) -> int:
    started = time.monotonic()
    report = RunReport(config={
        "command": "eval",
        "checkpoints": list(args.checkpoint),
        "embeddings": args.embeddings,
        "dataset": args.dataset,
        "template_index": args.template_index if args.dataset else None,
    })
    n_test = None
    for path in args.checkpoint:
        model, _, config = load_checkpoint(path)
        batch = _eval_batch_for(args, model, config)
        n_test = batch.n
        score = evaluate_model(model, batch)
        template = (
            args.template_index if args.dataset is not None
            else int(config.get("template_index", -1))
        )
        lam = config.get("lambda", [1.0, 1.0, 1.0])
        report.runs.append(RunRecord(
            seed=int(config.get("seed", -1)),
            template=template,
            k=int(config.get("k", -1)),
            lam=(float(lam[0]), float(lam[1]), float(lam[2])),
            micro_f1=score,
        ))
        log.info("eval %s -> micro_f1 %.4f", path, score)
    report.config["n_test"] = n_test
    if args.timing:
        report.timing_seconds = time.monotonic() - started
    report.write(args.out)
    print(json.dumps(_round_floats(report.aggregate()), sort_keys=True))
    return 0


def cmd_ablate(args) -> int:
    labels = load_label_space(args.labels, args.label_words)
    seeds = args.seed
    os.makedirs(args.out, exist_ok=True)

    if args.encoder == "precomputed":
        _require(args, ["--embeddings", "--test-embeddings"], "--encoder precomputed")
        _forbid(args, ["--dataset", "--test-dataset", "--template-file"],
                "--encoder precomputed")
        _, pool = _labeled_store_batch(args.embeddings)
        _, test_batch = _labeled_store_batch(args.test_embeddings)
        if pool.m != test_batch.m:
            raise DataError(
                f"{args.embeddings} (m={pool.m}) and {args.test_embeddings} "
                f"(m={test_batch.m}) disagree"
            )
        template_index = -1

        def episode_batch(seed: int) -> EmbeddingBatch:
            idx = sample_k_per_class(pool.labels, args.k, labels.k, seed)
            return EmbeddingBatch(vectors=pool.vectors[idx], labels=pool.labels[idx])

    else:
        _require(args, ["--dataset", "--test-dataset", "--template-file"],
                 "--encoder toy")
        _forbid(args, ["--embeddings", "--test-embeddings"], "--encoder toy")
        schema = parse_schema(args.schema)
        ds = load_dataset(args.dataset, schema, labels, split=_stem(args.dataset))
        test_ds = load_dataset(args.test_dataset, schema, labels,
                               split=_stem(args.test_dataset))
        template = _pick_template(args.template_file, args.template_index)
        spec = _encoder_spec(args)
        _, test_batch = _encode_dataset(spec, test_ds, template)
        template_index = args.template_index

        def episode_batch(seed: int) -> EmbeddingBatch:
            episode = k_shot_sample(ds, EpisodeSpec(args.k, seed, args.template_index))
            _, batch = _encode_dataset(spec, episode, template)
            return batch

    d = args.dim_d if args.dim_d is not None else DEFAULT_DIM_D
    base_config = {
        "command": "ablate",
        "k": args.k,
        "seeds": list(seeds),
        "template_index": template_index,
        "encoder_kind": args.encoder,
        "n_test": test_batch.n,
    }
    reports = {slug: RunReport(config=dict(base_config, combo=slug,
                                           **{"lambda": list(w.as_tuple())}))
               for slug, w in CANONICAL_ABLATION}
    for seed in seeds:
        batch = episode_batch(seed)
        init = init_model(batch.m, d, labels.k, seed)
        cfg = _optim_config(args, seed, args.encoder)
        for slug, weights in CANONICAL_ABLATION:
            model = copy.deepcopy(init)
            trained, _ = train(batch, model, weights, cfg)
            score = evaluate_model(trained, test_batch)
            reports[slug].runs.append(RunRecord(
                seed=seed, template=template_index, k=args.k,
                lam=weights.as_tuple(), micro_f1=score,
            ))
            log.info("ablate seed=%d %s -> micro_f1 %.4f", seed, slug, score)

    summary = {"config": base_config, "combos": {}}
    for slug, _ in CANONICAL_ABLATION:
        report = reports[slug]
        report.write(os.path.join(args.out, f"report_{slug}.json"))
        summary["combos"][slug] = report.aggregate()
    atomic_write_text(
        os.path.join(args.out, "summary.json"),
        json.dumps(_round_floats(summary), sort_keys=True, indent=2) + "\n",
    )
    return 0


def cmd_params(args) -> int:
    try:
        print(count_params(args.dim_m, args.dim_d, args.classes, args.head))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return 0


def cmd_dump(args) -> int:
    model, names, _ = load_checkpoint(args.checkpoint)
    store = load_embeddings(args.embeddings)
    dump_embeddings(model, store, args.out, names=names)
    log.info("dumped %d records + %d prototypes to %s", len(store), model.k, args.out)
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def _add_encoder_flags(p):
    p.add_argument("--encoder", choices=["toy", "precomputed"], default="toy")
    p.add_argument("--dim-m", type=int, default=None, help="toy encoder dimension")
    p.add_argument("--encoder-seed", type=int, default=None,
                   help="hash seed of the toy encoder (independent of --seed)")
    p.add_argument("--max-tokens", type=int, default=None)


def _add_optim_flags(p):
    p.add_argument("--dim-d", type=int, default=None, help="prototype space dimension")
    p.add_argument("--lambda1", type=float, default=1.0)
    p.add_argument("--lambda2", type=float, default=1.0)
    p.add_argument("--lambda3", type=float, default=1.0)
    p.add_argument("--lr", type=float, default=None,
                   help="default 1e-2 for toy, 3e-5 for precomputed")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--weight-decay", type=float, default=0.01)


def _add_data_flags(p, with_template=True):
    p.add_argument("--dataset", default=None)
    p.add_argument("--schema", default="label=0,text=1")
    p.add_argument("--labels", default=None)
    p.add_argument("--label-words", default=None)
    if with_template:
        p.add_argument("--template-file", default=None)
        p.add_argument("--template-index", type=int, default=0)


def build_parser() -> _Parser:
    parser = _Parser(prog="protoverb", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic benchmark")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--train-per-class", type=int, default=100)
    p.add_argument("--test-per-class", type=int, default=100)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("encode", help="template-fill and toy-encode a dataset")
    _add_data_flags(p)
    _add_encoder_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--emit-texts", default=None,
                   help="also write the template-filled prompts, one per line")
    p.add_argument("--emit-labels", default=None)
    p.set_defaults(fn=cmd_encode)

    p = sub.add_parser("pretrain", help="zero-shot prototypes from keyword sentences")
    p.add_argument("--corpus", default=None)
    p.add_argument("--labels", default=None, required=True)
    p.add_argument("--label-words", default=None, required=True)
    p.add_argument("--q", type=int, default=None,
                   help=f"sentences sampled per label (default {DEFAULT_Q})")
    p.add_argument("--seed", type=_seed_list, default=[0])
    p.add_argument("--embeddings", default=None,
                   help="precomputed pseudo-labeled prompt embeddings")
    _add_encoder_flags(p)
    _add_optim_flags(p)
    p.add_argument("--out", default=None, help="checkpoint path (or dir for seed lists)")
    p.add_argument("--emit-texts", default=None)
    p.add_argument("--emit-labels", default=None)
    p.set_defaults(fn=cmd_pretrain)

    p = sub.add_parser("train", help="train on a k-shot episode")
    _add_data_flags(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=_seed_list, default=[0])
    p.add_argument("--embeddings", default=None)
    p.add_argument("--checkpoint", default=None, help="warm-start checkpoint")
    _add_encoder_flags(p)
    _add_optim_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="score checkpoints, write a JSON report")
    p.add_argument("--checkpoint", type=_path_list, required=True,
                   help="checkpoint path, or a comma list for aggregate reports")
    p.add_argument("--embeddings", default=None, help="labeled test embeddings")
    _add_data_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock seconds (breaks byte-identical reports)")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("ablate", help="sweep the canonical loss combinations")
    _add_data_flags(p)
    p.add_argument("--test-dataset", default=None)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--test-embeddings", default=None)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=_seed_list, default=[0])
    _add_encoder_flags(p)
    _add_optim_flags(p)
    p.add_argument("--out", required=True, help="directory for the 5 combo reports")
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("params", help="print trainable-parameter counts")
    p.add_argument("--head", choices=["ppv", "spv"], required=True)
    p.add_argument("--dim-m", type=int, required=True)
    p.add_argument("--dim-d", type=int, default=None)
    p.add_argument("--classes", type=int, required=True)
    p.set_defaults(fn=cmd_params)

    p = sub.add_parser("dump", help="export transformed embeddings + prototypes")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_dump)

    return parser


def main(argv=None) -> int:
    try:
        _setup_logging()
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        print(f"protoverb: usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"protoverb: data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"protoverb: numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
