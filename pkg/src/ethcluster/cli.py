"""Command-line interface.

Every pipeline stage is exposed as a subcommand, plus ``run`` for the whole
sequence and ``scan`` for single-contract inference. Failures print one JSON
object to stderr and exit nonzero; success exits 0.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import cluster as cl
from . import detect as detect_mod
from . import embed, vectorize
from .errors import EthClusterError, FormatError, PathError, PipelineStageError, RateLimited
from .evaluate import confusion, metrics, project2d, render_table, write_points_csv, write_report
from .ingest import (
    DEFAULT_ENDPOINTS,
    ContractStore,
    Dataset,
    ExplorerClient,
    build_mixed_dataset,
    records_from_dir,
)
from .pipeline import PipelineConfig, run_pipeline, scan_contract
from .preprocess import preprocess_contract

RATE_LIMIT_RETRIES = 5


def _read_sources(directory: str) -> list[tuple[str, str]]:
    """(stem, source) for every .sol under directory, sorted by path."""
    root = Path(directory)
    if not root.is_dir():
        raise PathError(f"not a directory: {directory}")
    pairs = []
    for path in sorted(root.rglob("*.sol")):
        pairs.append((path.stem, path.read_text("utf-8", errors="replace")))
    if not pairs:
        raise PathError(f"no .sol files under {directory}")
    return pairs


def _read_token_docs(directory: str) -> tuple[list[str], list[list[str]], dict[str, str]]:
    """Token documents written by ``preprocess``: one token per line per .txt."""
    root = Path(directory)
    if not root.is_dir():
        raise PathError(f"not a directory: {directory}")
    stems, docs = [], []
    for path in sorted(root.glob("*.txt")):
        stems.append(path.stem)
        docs.append([line for line in path.read_text("utf-8").splitlines() if line])
    if not docs:
        raise PathError(f"no .txt token files under {directory}")
    manifest_path = root / "manifest.json"
    manifest = json.loads(manifest_path.read_text("utf-8")) if manifest_path.exists() else {}
    return stems, docs, manifest


def cmd_ingest(args) -> int:
    endpoints = None
    if args.endpoint:
        endpoints = dict(DEFAULT_ENDPOINTS)
        endpoints[args.chain] = args.endpoint
    client = ExplorerClient(endpoints=endpoints, rate_per_second=args.rate)
    store = ContractStore(args.store)
    addresses = [
        line.strip() for line in Path(args.addresses).read_text("utf-8").splitlines()
        if line.strip() and not line.startswith("#")
    ]
    outcomes = {"stored": 0, "duplicate": 0, "failed": 0}
    for address in addresses:
        attempt = 0
        while True:
            try:
                record = client.fetch_verified_source(args.chain, address)
                result = store.put(record)
                outcomes[result] += 1
                print(f"{address} {result}")
                break
            except RateLimited:
                attempt += 1
                if attempt > RATE_LIMIT_RETRIES:
                    outcomes["failed"] += 1
                    print(f"{address} failed: rate limited after {attempt} tries")
                    break
                time.sleep(min(2.0 ** attempt, 30.0))
            except EthClusterError as exc:
                outcomes["failed"] += 1
                print(f"{address} failed: {exc}")
                break
    print(f"stored={outcomes['stored']} duplicate={outcomes['duplicate']} "
          f"failed={outcomes['failed']} store={args.store}")
    return 0


def cmd_build_dataset(args) -> int:
    vulnerable = records_from_dir(args.vuln)
    clean = records_from_dir(args.clean)
    dataset = build_mixed_dataset(vulnerable, clean, args.fraction)
    dataset.save(args.out)
    n_vuln = sum(1 for _, label in dataset.entries if label == "vulnerable")
    print(f"{len(dataset.entries)} entries ({n_vuln} vulnerable) -> {args.out}")
    return 0


def cmd_preprocess(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {}
    for stem, source in _read_sources(args.input):
        doc = preprocess_contract(source)
        (out / f"{stem}.txt").write_text("\n".join(doc.tokens) + "\n", "utf-8")
        manifest[stem] = doc.contract_hash
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1), "utf-8")
    print(f"{len(manifest)} contracts tokenized -> {args.out}")
    return 0


def cmd_detect(args) -> int:
    docs = [preprocess_contract(source) for _, source in _read_sources(args.input)]
    flags = detect_mod.scan_corpus(docs, args.kind)
    payload = {
        "kind": args.kind,
        "flags": flags,
        "hashes": [doc.contract_hash for doc in docs],
    }
    Path(args.out).write_text(json.dumps(payload, indent=1), "utf-8")
    print(f"{sum(flags)}/{len(flags)} contracts flagged for {args.kind} -> {args.out}")
    return 0


def cmd_train_embedding(args) -> int:
    _, docs, _ = _read_token_docs(args.input)
    config = embed.EmbeddingConfig(
        vector_size=args.dim, window=args.window, min_count=args.min_count,
        workers=args.workers, sg=args.sg, epochs=args.epochs, seed=args.seed,
        negative=args.negative,
    )
    model = embed.train_embedding(docs, config)
    embed.save_model(model, args.out)
    print(f"vocab={len(model.vocab)} dim={args.dim} -> {args.out}")
    return 0


def cmd_vectorize(args) -> int:
    stems, docs, manifest = _read_token_docs(args.input)
    model = embed.load_model(args.embedding)
    dictionary = vectorize.build_dictionary(docs)
    tfidf = vectorize.TfidfModel(dictionary)
    bags = [vectorize.doc2bow(dictionary, doc) for doc in docs]
    flags = None
    if args.flags:
        try:
            payload = json.loads(Path(args.flags).read_text("utf-8"))
            flags = {payload["kind"]: payload["flags"]}
        except (KeyError, json.JSONDecodeError) as exc:
            raise FormatError(f"{args.flags}: bad flags file: {exc}") from exc
    keyword_map = vectorize.select_keywords(bags, tfidf, model, args.threshold, flags)
    dim = model.config.vector_size
    hashes = [manifest.get(stem, stem) for stem in stems]
    vectors = [
        vectorize.DocumentVector(h, vectorize.doc_vector_values(doc, keyword_map, dim))
        for h, doc in zip(hashes, docs)
    ]
    vectorize.save_vectors(vectors, args.out)
    keywords_path = Path(args.out).parent / "keywords.json"
    vectorize.save_keyword_map(keyword_map, keywords_path)
    print(f"{len(vectors)} vectors (dim {dim}, {len(keyword_map)} keywords) -> {args.out}")
    return 0


def cmd_cluster(args) -> int:
    vectors = vectorize.load_vectors(args.vectors)
    X = np.array([v.values for v in vectors])
    basis = None
    if X.shape[1] > args.pca_threshold:
        n_comp = min(args.pca_components, X.shape[0], X.shape[1])
        basis = cl.pca_fit(X, n_comp)
        X = cl.pca_transform(basis, X)
    model = cl.kmeans_fit(X, k=args.k, max_iterations=args.max_iter, seed=args.seed)
    if args.dataset:
        model = cl.label_clusters(model, Dataset.load(args.dataset))
    cl.save_cluster_model(model, basis, args.out)
    print(f"k={args.k} iterations={model.iterations_run} -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    model, _, _ = cl.load_cluster_model(args.model)
    dataset = Dataset.load(args.dataset)
    if not model.labels:
        model = cl.label_clusters(model, dataset)
    predicted = [model.labels[int(a)] for a in model.assignments]
    cm = confusion(predicted, dataset.truth_labels)
    report = metrics(cm)
    write_report(args.kind or "unspecified", cm, report, {}, args.out)
    print(render_table(args.kind or "unspecified", cm, report))
    return 0


def cmd_project(args) -> int:
    vectors = vectorize.load_vectors(args.vectors)
    model, basis, _ = cl.load_cluster_model(args.model)
    X = np.array([v.values for v in vectors])
    if basis is not None:
        X = cl.pca_transform(basis, X)
    assignments = [cl.nearest_center(model, row) for row in X]
    labels = [model.labels.get(a, "unlabeled") for a in assignments]
    rows = project2d(X, assignments, labels)
    write_points_csv(rows, args.out)
    print(f"{len(rows)} points -> {args.out}")
    return 0


def _resolved_config(args) -> PipelineConfig:
    values = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise PathError(f"config file not found: {args.config}")
        try:
            values = json.loads(path.read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{args.config}: bad config file: {exc}") from exc
    overrides = {
        "vulnerability": args.vulnerability,
        "dataset": getattr(args, "dataset", None),
        "workdir": args.workdir,
        "seed": getattr(args, "seed", None),
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig.resolve(values)


def cmd_run(args) -> int:
    config = _resolved_config(args)
    run_pipeline(config)
    out = config.stage_dir()
    print((out / "report.txt").read_text("utf-8").rstrip())
    print(f"artifacts under {out}")
    return 0


def cmd_scan(args) -> int:
    config = _resolved_config(args)
    source = Path(args.contract).read_text("utf-8", errors="replace")
    result = scan_contract(config, source)
    print(json.dumps(result, indent=1, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ethcluster",
        description="Unsupervised Solidity vulnerability detection pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="fetch verified source from a block explorer")
    p.add_argument("--chain", required=True)
    p.add_argument("--addresses", required=True, help="file with one 0x address per line")
    p.add_argument("--store", default="contracts.ndjson")
    p.add_argument("--endpoint", default=None, help="override the chain's API endpoint")
    p.add_argument("--rate", type=float, default=4.0, help="requests per second")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-dataset", help="mix vulnerable and clean dirs into a dataset")
    p.add_argument("--vuln", required=True)
    p.add_argument("--clean", required=True)
    p.add_argument("--fraction", type=float, default=0.3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("preprocess", help="tokenize contracts, one token per line")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("detect", help="regex-flag a corpus for one vulnerability kind")
    p.add_argument("--kind", required=True)
    p.add_argument("--in", dest="input", required=True, help="directory of .sol sources")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("train-embedding", help="train word vectors over token files")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--sg", type=int, default=1, choices=(0, 1))
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--negative", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_embedding)

    p = sub.add_parser("vectorize", help="select keywords and build document vectors")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--embedding", required=True)
    p.add_argument("--flags", default=None)
    p.add_argument("--threshold", type=float, default=0.7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vectorize)

    p = sub.add_parser("cluster", help="PCA (if high-dimensional) plus seeded k-means")
    p.add_argument("--vectors", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=1194)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--pca-threshold", type=int, default=50)
    p.add_argument("--pca-components", type=int, default=50)
    p.add_argument("--dataset", default=None, help="label clusters from this dataset")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("evaluate", help="confusion matrix and metrics for a labeled model")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--kind", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("project", help="export 2D PCA points for plotting")
    p.add_argument("--vectors", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("run", help="run the whole pipeline for one vulnerability")
    p.add_argument("--config", default=None)
    p.add_argument("--vulnerability", default=None)
    p.add_argument("--dataset", default=None)
    p.add_argument("--workdir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("scan", help="classify one contract with trained artifacts")
    p.add_argument("contract", help="path to a .sol file")
    p.add_argument("--config", default=None)
    p.add_argument("--vulnerability", default=None)
    p.add_argument("--workdir", default=None)
    p.set_defaults(func=cmd_scan)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PipelineStageError as exc:
        payload = {"error": type(exc.cause).__name__, "message": str(exc.cause), "stage": exc.stage}
        print(json.dumps(payload), file=sys.stderr)
        return 1
    except EthClusterError as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(payload), file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(json.dumps({"error": "PathError", "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
