"""End-to-end orchestration: one trained detector per vulnerability.

Each vulnerability runs as its own one-class pipeline over an ordered
vulnerable-first dataset: preprocess, regex flags, embedding training,
TF-IDF keyword selection, optional PCA, seeded k-means, sequence-based
cluster labeling, metrics. Every stage persists its artifact under
``<workdir>/<vulnerability>/`` so runs are resumable and inspectable, and
every artifact is a deterministic function of (dataset, config).
"""

from __future__ import annotations

import json
import os
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import cluster as cl
from . import detect, embed, vectorize
from .errors import InvalidInput, ModelNotFound, PathError, PipelineStageError
from .evaluate import MetricsReport, confusion, metrics, render_table, write_report
from .ingest import Dataset
from .preprocess import TokenDoc, preprocess_contract

REENTRANCY = "reentrancy"
ACCESS_CONTROL = "access_control"
TIMESTAMP = "timestamp"
TX_ORIGIN = "tx_origin"
UNCHECKED_CALL = "unchecked_call"

VULNERABILITIES = (REENTRANCY, ACCESS_CONTROL, TIMESTAMP, TX_ORIGIN, UNCHECKED_CALL)

# Per-vulnerability (vector_size, tfidf_threshold, num_clusters) defaults.
CLUSTERING_DEFAULTS: dict[str, tuple[int, float, int]] = {
    REENTRANCY: (10, 0.7, 5),
    ACCESS_CONTROL: (50, 0.3, 3),
    TIMESTAMP: (300, 0.7, 6),
    TX_ORIGIN: (300, 0.7, 6),
    UNCHECKED_CALL: (100, 0.7, 8),
}

DEFAULT_SEED = 1194
WORKDIR_ENV = "ETHCLUSTER_WORKDIR"


@dataclass(frozen=True)
class PipelineConfig:
    vulnerability: str
    dataset: str = ""
    workdir: str = ""
    vector_size: int = 0
    tfidf_threshold: float = -1.0
    num_clusters: int = 0
    seed: int = DEFAULT_SEED
    max_iterations: int = 100
    pca_components: int = 50
    pca_activation_dim: int = 50
    window: int = 5
    epochs: int = 5
    sg: int = 1
    min_count: int = 1
    negative: int = 5
    workers: int = 1
    initial_learning_rate: float = 0.025

    @classmethod
    def resolve(cls, values: dict) -> "PipelineConfig":
        """Fill omitted fields from the per-vulnerability defaults.

        ``values`` comes from a config file merged with CLI overrides; the
        vulnerability name keys the clustering defaults.
        """
        values = dict(values)
        vulnerability = values.get("vulnerability", "")
        if vulnerability not in VULNERABILITIES:
            raise InvalidInput(
                f"vulnerability must be one of {', '.join(VULNERABILITIES)}; got {vulnerability!r}"
            )
        dim, threshold, k = CLUSTERING_DEFAULTS[vulnerability]
        values.setdefault("vector_size", dim)
        values.setdefault("tfidf_threshold", threshold)
        values.setdefault("num_clusters", k)
        if not values.get("workdir"):
            values["workdir"] = os.environ.get(WORKDIR_ENV, "ethcluster-work")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(values) - known
        if unknown:
            raise InvalidInput(f"unknown config fields: {sorted(unknown)}")
        return cls(**values)

    @property
    def regex_kind(self) -> str | None:
        """The regex kind backing this vulnerability, if any."""
        return self.vulnerability if self.vulnerability in detect.REGEX_KINDS else None

    def stage_dir(self) -> Path:
        return Path(self.workdir) / self.vulnerability

    def embedding_config(self) -> embed.EmbeddingConfig:
        return embed.EmbeddingConfig(
            vector_size=self.vector_size,
            window=self.window,
            min_count=self.min_count,
            workers=self.workers,
            sg=self.sg,
            epochs=self.epochs,
            seed=self.seed,
            negative=self.negative,
            initial_learning_rate=self.initial_learning_rate,
        )


def _save_tokendocs(docs: list[TokenDoc], path: Path) -> None:
    payload = [
        {"contract_hash": d.contract_hash, "tokens": list(d.tokens), "lines": list(d.lines)}
        for d in docs
    ]
    path.write_text(json.dumps(payload, indent=1), "utf-8")


def _load_tokendocs(path: Path) -> list[TokenDoc]:
    payload = json.loads(path.read_text("utf-8"))
    return [
        TokenDoc(d["contract_hash"], tuple(d["tokens"]), tuple(d["lines"]))
        for d in payload
    ]


@contextmanager
def stage(name: str):
    """Tag any failure inside the block with the stage that raised it."""
    try:
        yield
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError(name, exc) from exc


def run_pipeline(config: PipelineConfig) -> MetricsReport:
    """Train, label and evaluate one vulnerability detector end to end."""
    out = config.stage_dir()
    out.mkdir(parents=True, exist_ok=True)
    params = asdict(config)

    with stage("dataset"):
        if not config.dataset or not Path(config.dataset).exists():
            raise PathError(f"dataset file not found: {config.dataset!r}")
        dataset = Dataset.load(config.dataset)

    with stage("preprocess"):
        docs = [preprocess_contract(rec.source) for rec in dataset.records]
        _save_tokendocs(docs, out / "preprocess.json")

    with stage("detect"):
        kind = config.regex_kind
        flag_array = detect.scan_corpus(docs, kind) if kind else None
        (out / "detect.json").write_text(json.dumps({
            "kind": kind,
            "flags": flag_array,
            "hashes": [d.contract_hash for d in docs],
        }, indent=1), "utf-8")

    with stage("embed"):
        model = embed.train_embedding([list(d.tokens) for d in docs], config.embedding_config())
        embed.save_model(model, out / "embedding.vec")

    with stage("vectorize"):
        token_lists = [list(d.tokens) for d in docs]
        dictionary = vectorize.build_dictionary(token_lists)
        tfidf = vectorize.TfidfModel(dictionary)
        bags = [vectorize.doc2bow(dictionary, toks) for toks in token_lists]
        flags = {kind: flag_array} if kind else None
        keyword_map = vectorize.select_keywords(
            bags, tfidf, model, config.tfidf_threshold, flags
        )
        vectors = vectorize.document_vectors(docs, keyword_map, config.vector_size)
        vectorize.save_keyword_map(keyword_map, out / "keywords.json")
        vectorize.save_vectors(vectors, out / "vectors.json")

    with stage("cluster"):
        X = np.array([v.values for v in vectors])
        basis = None
        if config.vector_size > config.pca_activation_dim:
            n_comp = min(config.pca_components, X.shape[0], X.shape[1])
            basis = cl.pca_fit(X, n_comp)
            X = cl.pca_transform(basis, X)
        cmodel = cl.kmeans_fit(X, k=config.num_clusters,
                               max_iterations=config.max_iterations, seed=config.seed)
        cmodel = cl.label_clusters(cmodel, dataset)
        cl.save_cluster_model(cmodel, basis, out / "model.json", extra=params)

    with stage("evaluate"):
        predicted = [cmodel.labels[int(a)] for a in cmodel.assignments]
        cm = confusion(predicted, dataset.truth_labels)
        report = metrics(cm)
        write_report(config.vulnerability, cm, report, params, out / "report.json")
        (out / "report.txt").write_text(
            render_table(config.vulnerability, cm, report) + "\n", "utf-8"
        )

    return report


def scan_contract(config: PipelineConfig, source: str) -> dict:
    """Classify one contract against the persisted pipeline artifacts.

    Returns the predicted label plus, for vulnerabilities backed by a regex
    pattern, that pattern's flag on this contract.
    """
    out = config.stage_dir()
    model_path = out / "model.json"
    keywords_path = out / "keywords.json"
    if not model_path.exists() or not keywords_path.exists():
        raise ModelNotFound(
            f"no trained artifacts for {config.vulnerability!r} under {out}"
        )
    keyword_map = vectorize.load_keyword_map(keywords_path)
    cmodel, basis, _ = cl.load_cluster_model(model_path)

    doc = preprocess_contract(source)
    values = vectorize.doc_vector_values(doc.tokens, keyword_map, config.vector_size)
    label = cl.predict(cmodel, basis, values)

    result: dict = {"vulnerability": config.vulnerability, "label": label}
    kind = config.regex_kind
    if kind is not None:
        result["flags"] = {kind: detect.detector_for(kind)(doc.lines)}
    return result
