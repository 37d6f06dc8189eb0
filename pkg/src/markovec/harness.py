"""Experiment orchestration: seeded pipelines from kernel to trained model,
CSV emission, and the numerical self-checks exposed by the CLI.

A single ExperimentConfig drives one grid: for every (embedding dim, seed)
pair the harness builds a kernel (block-structured or fully random), derives
its width-C context matrix, samples a corpus, trains a skip-gram model, and
logs the loss and recovery-distance trace. Presets reproduce the standard
grids at desk scale. Every run directory gets a manifest that pins the
config, the derived seeds, and library versions, so runs can be reproduced
bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .embedder import (
    TrainConfig,
    Word2VecModel,
    init_model,
    mean_corpus_loss,
    train_skipgram,
)
from .errors import ConstructionFailed
from .kernel import (
    BlockSpec,
    EIGENVALUE_CLAMP,
    ReferenceModel,
    StochasticMatrix,
    block_kernel,
    kernel_from_reference,
    random_kernel,
    reference_from_kernel,
    stationary,
)
from .metrics import TRACE_CSV_COLUMNS, block_similarity_stats, expected_cross_entropy
from .textgen import Corpus, MarkovModel, sample_corpus

TRACE_SCHEMA = "trace-v1"
BLOCK_RECOVERY_SCHEMA = "block-recovery-v1"
BLOCK_RECOVERY_COLUMNS = ("N", "seed", "intra_mean", "intra_std", "inter_mean", "inter_std")
ROUNDTRIP_TOLERANCE = 1e-8
LOSSLIMIT_MAX_RELATIVE_GAP = 0.01


@dataclass(frozen=True)
class ExperimentConfig:
    vocab_size: int
    dims: tuple[int, ...]
    width: int
    block: BlockSpec | None
    corpus_length: int
    epochs: int
    learning_rate: float
    seeds: tuple[int, ...]
    log_every: int
    out_dir: str

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.vocab_size < 2 or not self.dims or not self.seeds:
            raise ValueError("config needs vocab_size >= 2, dims, and seeds")
        if min(self.dims) < 1 or self.width < 1 or self.corpus_length < 1:
            raise ValueError("dims, width, and corpus_length must be positive")
        if self.epochs < 1 or self.learning_rate <= 0 or self.log_every < 1:
            raise ValueError("epochs, learning_rate, log_every must be positive")
        if self.block is not None and self.block.structured_rows > self.vocab_size:
            raise ValueError(
                f"block spec {self.block} does not fit vocab_size={self.vocab_size}"
            )

    def to_dict(self) -> dict:
        data = {
            "V": self.vocab_size,
            "N": list(self.dims),
            "C": self.width,
            "blocks": self.block.num_blocks if self.block else None,
            "block_size": self.block.block_size if self.block else None,
            "T": self.corpus_length,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "seeds": list(self.seeds),
            "log_every": self.log_every,
            "out_dir": str(self.out_dir),
        }
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        block = None
        if data.get("blocks"):
            block = BlockSpec(int(data["blocks"]), int(data["block_size"]))
        return cls(
            vocab_size=int(data["V"]),
            dims=tuple(data["N"]),
            width=int(data["C"]),
            block=block,
            corpus_length=int(data["T"]),
            epochs=int(data["epochs"]),
            learning_rate=float(data["learning_rate"]),
            seeds=tuple(data["seeds"]),
            log_every=int(data["log_every"]),
            out_dir=str(data["out_dir"]),
        )

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()


def derive_seeds(seed: int, count: int = 3) -> tuple[int, ...]:
    """Stable child seeds (kernel, corpus, train) from one experiment seed."""
    state = np.random.SeedSequence(seed).generate_state(count, np.uint64)
    return tuple(int(s) for s in state)


def _build_kernel(config: ExperimentConfig, kernel_seed: int) -> StochasticMatrix:
    if config.block is not None:
        return block_kernel(config.vocab_size, config.block, kernel_seed)
    return random_kernel(config.vocab_size, kernel_seed)


def _seed_pipeline(config: ExperimentConfig, seed: int):
    """Kernel, reference model, and corpus shared by all dims of one seed."""
    kernel_seed, corpus_seed, train_seed = derive_seeds(seed)
    kernel = _build_kernel(config, kernel_seed)
    rm = reference_from_kernel(kernel, config.width)
    corpus = sample_corpus(MarkovModel(kernel), config.corpus_length, corpus_seed)
    return kernel, rm, corpus, train_seed


def _train_one(
    config: ExperimentConfig,
    dim: int,
    train_seed: int,
    corpus: Corpus,
    rm: ReferenceModel | None,
):
    model = init_model(config.vocab_size, dim, config.width, train_seed)
    train_config = TrainConfig(
        learning_rate=config.learning_rate,
        epochs=config.epochs,
        seed=train_seed,
        log_every=config.log_every,
    )
    return train_skipgram(model, corpus, train_config, eval_rm=rm)


def write_trace_csv(path, trace, dim: int, seed: int) -> None:
    """Trace rows under a schema header; block columns stay empty here."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# schema={TRACE_SCHEMA} N={dim} seed={seed}\n")
        writer = csv.writer(fh)
        writer.writerow(TRACE_CSV_COLUMNS)
        for record in trace.records:
            distance = "" if record.cosine_distance is None else f"{record.cosine_distance:.17g}"
            writer.writerow(
                [record.step, f"{record.mean_loss:.17g}", distance, "", "", "", ""]
            )


def _write_manifest(out_dir: Path, config: ExperimentConfig, runs: list[dict]) -> None:
    manifest = {
        "markovec_version": __version__,
        "numpy_version": np.__version__,
        "schema": {"trace": TRACE_SCHEMA, "block_recovery": BLOCK_RECOVERY_SCHEMA},
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "seed_derivation": "SeedSequence(seed).generate_state(3) -> kernel, corpus, train",
        "runs": runs,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _identifiability_seed_worker(config_dict: dict, seed: int) -> list[dict]:
    config = ExperimentConfig.from_dict(config_dict)
    out_dir = Path(config.out_dir)
    kernel, rm, corpus, train_seed = _seed_pipeline(config, seed)
    runs = []
    for dim in config.dims:
        started = time.perf_counter()
        _, trace = _train_one(config, dim, train_seed, corpus, rm)
        elapsed = time.perf_counter() - started
        trace_path = out_dir / f"trace_N{dim}_seed{seed}.csv"
        write_trace_csv(trace_path, trace, dim, seed)
        runs.append({
            "N": dim,
            "seed": seed,
            "trace": trace_path.name,
            "final_cosine_distance": trace.final().cosine_distance,
            "wall_seconds": round(elapsed, 3),
        })
    return runs


def run_identifiability(config: ExperimentConfig, workers: int = 1) -> list[Path]:
    """One trace CSV per (dim, seed) plus a manifest; returns the CSV paths.

    Seeds are independent, so they can run in parallel processes. Results are
    flushed per run; the manifest is rewritten as runs land.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    all_runs: list[dict] = []
    if workers > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_identifiability_seed_worker, config.to_dict(), seed)
                for seed in config.seeds
            ]
            for future in futures:
                all_runs.extend(future.result())
                _write_manifest(out_dir, config, all_runs)
    else:
        for seed in config.seeds:
            all_runs.extend(_identifiability_seed_worker(config.to_dict(), seed))
            _write_manifest(out_dir, config, all_runs)
    _write_manifest(out_dir, config, all_runs)
    return [out_dir / run["trace"] for run in all_runs]


def run_block_recovery(config: ExperimentConfig) -> Path:
    """Train per (dim, seed) and tabulate intra vs inter block similarity."""
    if config.block is None:
        raise ValueError("block recovery needs a block spec")
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "block_recovery.csv"
    rows = []
    runs = []
    for seed in config.seeds:
        _, rm, corpus, train_seed = _seed_pipeline(config, seed)
        for dim in config.dims:
            started = time.perf_counter()
            trained, _ = _train_one(config, dim, train_seed, corpus, rm=None)
            intra, inter = block_similarity_stats(trained, rm, config.block)
            elapsed = time.perf_counter() - started
            rows.append((dim, seed, intra, inter))
            runs.append({
                "N": dim, "seed": seed,
                "intra_mean": intra.mean, "inter_mean": inter.mean,
                "wall_seconds": round(elapsed, 3),
            })
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# schema={BLOCK_RECOVERY_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(BLOCK_RECOVERY_COLUMNS)
        for dim, seed, intra, inter in rows:
            writer.writerow([
                dim, seed,
                f"{intra.mean:.17g}", f"{intra.std:.17g}",
                f"{inter.mean:.17g}", f"{inter.std:.17g}",
            ])
    _write_manifest(out_dir, config, runs)
    return csv_path


# -- numerical self-checks ---------------------------------------------------

@dataclass(frozen=True)
class RoundtripReport:
    vocab_size: int
    width: int
    seed: int
    max_error: float
    tolerance: float
    passed: bool


def random_symmetric_kernel(vocab_size: int, seed: int, attempts: int = 100) -> StochasticMatrix:
    """Random symmetric stochastic matrix with spectrum inside [0, 1].

    Symmetrized random edge weights are normalized by the largest degree into
    a lazy-walk kernel (symmetric, spectrum in [-1, 1]), then averaged with
    the identity to shift the spectrum into [0, 1]. Each attempt is verified
    numerically before being returned.
    """
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        weights = rng.random((vocab_size, vocab_size))
        weights = weights + weights.T
        heaviest = weights.sum(axis=1).max()
        walk = weights / heaviest
        walk[np.diag_indices(vocab_size)] += 1.0 - walk.sum(axis=1)
        shifted = 0.5 * (np.eye(vocab_size) + walk)
        eigenvalues = np.linalg.eigvalsh(0.5 * (shifted + shifted.T))
        if eigenvalues.min() >= -EIGENVALUE_CLAMP and eigenvalues.max() <= 1.0 + EIGENVALUE_CLAMP:
            return StochasticMatrix(shifted)
    raise ConstructionFailed(attempts)


def run_roundtrip_check(vocab_size: int, width: int, seed: int) -> RoundtripReport:
    """Kernel -> context matrix -> kernel; report the max entrywise error."""
    kernel = random_symmetric_kernel(vocab_size, seed)
    rm = reference_from_kernel(kernel, width)
    recovered = kernel_from_reference(rm)
    max_error = float(np.abs(recovered.probs - kernel.probs).max())
    return RoundtripReport(
        vocab_size=vocab_size,
        width=width,
        seed=seed,
        max_error=max_error,
        tolerance=ROUNDTRIP_TOLERANCE,
        passed=max_error < ROUNDTRIP_TOLERANCE,
    )


@dataclass(frozen=True)
class LossLimitRow:
    model_index: int
    corpus_length: int
    mean_loss: float
    expected: float
    relative_gap: float


@dataclass(frozen=True)
class LossLimitReport:
    vocab_size: int
    seed: int
    rows: tuple[LossLimitRow, ...]
    passed: bool


def run_losslimit_check(
    vocab_size: int,
    corpus_length: int,
    seed: int,
    n_models: int = 3,
    model_dim: int = 8,
) -> LossLimitReport:
    """Corpus-mean loss of fixed random models vs the cross-entropy limit.

    Width is pinned to 1. The gap is evaluated on nested corpus prefixes
    (T/100, T/10, T); the check passes when every model's relative gap at the
    full length is below 1%.
    """
    kernel = random_kernel(vocab_size, seed)
    rm = reference_from_kernel(kernel, 1)
    mu = stationary(kernel)
    corpus_seed, *model_seeds = derive_seeds(seed, 1 + n_models)
    corpus = sample_corpus(MarkovModel(kernel), corpus_length, corpus_seed)
    lengths = sorted({max(corpus_length // 100, 2), max(corpus_length // 10, 2), corpus_length})
    rows = []
    for index, model_seed in enumerate(model_seeds):
        # O(1) logit spread, so per-pivot losses genuinely vary and the
        # ergodic average has something nontrivial to converge to
        rng = np.random.default_rng(model_seed)
        model = Word2VecModel(
            rng.normal(scale=model_dim**-0.5, size=(vocab_size, model_dim)),
            rng.normal(scale=model_dim**-0.5, size=(model_dim, vocab_size)),
            1,
        )
        expected = expected_cross_entropy(model, rm, mu)
        for length in lengths:
            prefix = Corpus(corpus.tokens[:length])
            mean_loss = mean_corpus_loss(model, prefix)
            gap = abs(mean_loss - expected) / expected
            rows.append(LossLimitRow(index, length, mean_loss, expected, gap))
    final_gaps = [row.relative_gap for row in rows if row.corpus_length == corpus_length]
    passed = all(gap < LOSSLIMIT_MAX_RELATIVE_GAP for gap in final_gaps)
    return LossLimitReport(vocab_size, seed, tuple(rows), passed)


# -- presets -----------------------------------------------------------------

def preset_configs(name: str, out_dir, full: bool = False):
    """Desk-scale grids behind the standard preset names.

    Returns (tag, ExperimentConfig) pairs; each tag becomes a subdirectory.
    `full` widens the dim sweeps and seed lists toward the original grids.
    """
    out_dir = Path(out_dir)

    def cfg(vocab_size, dims, block, corpus_length, epochs, seeds, tag, log_every):
        return tag, ExperimentConfig(
            vocab_size=vocab_size,
            dims=tuple(dims),
            width=1,
            block=block,
            corpus_length=corpus_length,
            epochs=epochs,
            learning_rate=1e-4,
            seeds=tuple(seeds),
            log_every=log_every,
            out_dir=str(out_dir / tag),
        )

    seeds = (1, 2, 3) if full else (1,)
    if name == "fig1":
        dims = (2, 5, 10, 25, 50, 80) if full else (10, 80)
        return [
            cfg(50, dims, BlockSpec(8, 5), 10**6, 5, seeds, "blocks8x5", 20_000),
            cfg(50, dims, None, 10**6, 5, seeds, "noblock", 20_000),
        ]
    if name == "fig2":
        dims = (5, 10, 20, 50) if full else (10,)
        return [
            cfg(200, dims, BlockSpec(8, 20), 10**6, 5, seeds, "blocks8x20", 20_000),
            cfg(200, dims, BlockSpec(16, 10), 10**6, 5, seeds, "blocks16x10", 20_000),
            cfg(200, dims, BlockSpec(32, 5), 10**6, 5, seeds, "blocks32x5", 20_000),
            cfg(200, dims, None, 10**6, 5, seeds, "noblock", 20_000),
        ]
    if name == "fig3":
        dims = (200, 500, 800) if full else (200, 800)
        return [
            cfg(1000, dims, BlockSpec(10, 80), 4 * 10**6, 2, seeds, "blocks10x80", 200_000),
            cfg(1000, dims, BlockSpec(40, 20), 4 * 10**6, 2, seeds, "blocks40x20", 200_000),
            cfg(1000, dims, BlockSpec(160, 5), 4 * 10**6, 2, seeds, "blocks160x5", 200_000),
            cfg(1000, dims, None, 4 * 10**6, 2, seeds, "noblock", 200_000),
        ]
    if name == "fig4":
        grids = [cfg(50, (10,), BlockSpec(8, 5), 10**6, 5, (1, 2, 3, 4, 5), "blocks8x5", 20_000)]
        if full:
            grids.append(
                cfg(1000, (200, 500, 800), BlockSpec(160, 5), 4 * 10**6, 2, (1,),
                    "blocks160x5", 200_000)
            )
            grids.append(
                cfg(1000, (200, 500, 800), BlockSpec(40, 20), 4 * 10**6, 2, (1,),
                    "blocks40x20", 200_000)
            )
        return grids
    raise ValueError(f"unknown preset {name!r}")
