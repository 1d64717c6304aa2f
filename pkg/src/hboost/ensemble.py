"""Boosted ensembles of hierarchical clusterings.

Each iteration draws a weighted subsample, clusters it, folds the cophenetic
matrix of the resulting dendrogram into a streaming consensus, recovers an
aggregated dendrogram from the consensus, scores every sample by how well the
aggregated hierarchy reproduces its distance profile, and raises the weights
of poorly represented samples so they are picked more often next round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .combine import CombineOperator
from .dataset import DataMatrix, RunConfig, standardize
from .distance import (
    CondensedMatrix,
    pair_index,
    pairwise_euclidean,
    pearson,
    subsample_distances,
    to_square,
)
from .linkage import Dendrogram, agglomerate, cophenetic, cpcc


def weighted_sample(weights, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``m`` distinct indices without replacement, preferring high weights.

    Uses exponential keys: each index draws u ~ U(0,1) and the m largest
    u**(1/w) win. Returned indices are sorted ascending; the draw is fully
    determined by the generator state.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty 1-D vector")
    if not np.all(np.isfinite(w)) or (w <= 0).any():
        raise ValueError("all weights must be positive and finite")
    n = w.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"sample size must satisfy 1 <= m <= {n}, got {m}")
    if m == n:
        return np.arange(n, dtype=np.int64)
    keys = rng.random(n) ** (1.0 / w)
    chosen = np.argpartition(keys, n - m)[n - m :]
    return np.sort(chosen).astype(np.int64)


@dataclass
class ConsensusAccumulator:
    """Streaming per-pair reduction over the cophenetic matrices seen so far.

    ``count`` tracks how many subsamples covered each pair; ``stat`` holds the
    operator-specific statistic (running min, max, sum, or sum of d**beta).
    """

    n: int
    operator: CombineOperator
    count: np.ndarray
    stat: np.ndarray

    @classmethod
    def empty(cls, n: int, operator: CombineOperator) -> "ConsensusAccumulator":
        pairs = n * (n - 1) // 2
        if operator.beta == float("-inf"):
            init = np.inf
        elif operator.beta == float("inf"):
            init = -np.inf
        else:
            init = 0.0
        return cls(
            n=n,
            operator=operator,
            count=np.zeros(pairs, dtype=np.int64),
            stat=np.full(pairs, init, dtype=np.float64),
        )

    def covered(self) -> np.ndarray:
        return self.count > 0

    def values(self) -> np.ndarray:
        """Current combined value for every covered pair (others undefined)."""
        beta = self.operator.beta
        if beta in (float("-inf"), float("inf")):
            return self.stat.copy()
        safe = np.maximum(self.count, 1)
        if beta == 1.0:
            return self.stat / safe
        with np.errstate(divide="ignore"):
            return (self.stat / safe) ** (1.0 / beta)


def accumulate(acc: ConsensusAccumulator, subsample, cd_sub: CondensedMatrix) -> ConsensusAccumulator:
    """Fold one subsample's cophenetic matrix into the consensus state.

    ``cd_sub`` item p corresponds to full-dataset index subsample[p]. Pairs
    outside the subsample are untouched. Mutates and returns ``acc``.
    """
    idx = np.asarray(subsample, dtype=np.int64)
    if idx.ndim != 1:
        raise ValueError("subsample must be a 1-D index list")
    if cd_sub.n != idx.shape[0]:
        raise ValueError(f"matrix covers {cd_sub.n} items but subsample has {idx.shape[0]}")
    if idx.size and (idx.min() < 0 or idx.max() >= acc.n):
        raise ValueError(f"subsample index out of range for {acc.n} items")
    if np.unique(idx).shape[0] != idx.shape[0]:
        raise ValueError("subsample indices must be distinct")

    m = idx.shape[0]
    pi, pj = np.triu_indices(m, 1)
    a, b = idx[pi], idx[pj]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    flat = pair_index(lo, hi, acc.n)
    vals = cd_sub.data

    acc.count[flat] += 1
    beta = acc.operator.beta
    if beta == float("-inf"):
        acc.stat[flat] = np.minimum(acc.stat[flat], vals)
    elif beta == float("inf"):
        acc.stat[flat] = np.maximum(acc.stat[flat], vals)
    elif beta == 1.0:
        acc.stat[flat] += vals
    else:
        with np.errstate(divide="ignore"):
            acc.stat[flat] += vals**beta
    return acc


def consensus(acc: ConsensusAccumulator, euclid_full: CondensedMatrix, fallback: str) -> CondensedMatrix:
    """Consensus dissimilarity matrix over all items.

    Covered pairs take the combination operator's value. Uncovered pairs are
    filled by ``fallback``: "euclid-scaled" rescales the Euclidean entry by
    (max covered consensus / max Euclidean), "max-fill" uses the max covered
    consensus value. With no covered pair at all the Euclidean matrix is
    returned as-is.
    """
    if acc.n != euclid_full.n:
        raise ValueError(f"accumulator covers {acc.n} items, matrix {euclid_full.n}")
    if fallback not in ("euclid-scaled", "max-fill"):
        raise ValueError(f"unknown fallback mode {fallback!r}")
    covered = acc.covered()
    if not covered.any():
        return CondensedMatrix(acc.n, euclid_full.data.copy())
    out = np.empty_like(euclid_full.data)
    vals = acc.values()
    out[covered] = vals[covered]
    uncovered = ~covered
    if uncovered.any():
        max_consensus = out[covered].max()
        if fallback == "euclid-scaled":
            max_euclid = euclid_full.data.max()
            scale = max_consensus / max_euclid if max_euclid > 0 else 0.0
            out[uncovered] = euclid_full.data[uncovered] * scale
        else:
            out[uncovered] = max_consensus
    return CondensedMatrix(acc.n, out)


def boosted_values(euclid_full: CondensedMatrix, cd_agg: CondensedMatrix) -> np.ndarray:
    """Per-sample agreement between original and aggregated-hierarchy distances.

    Entry n is the Pearson correlation between sample n's Euclidean distances
    to every other sample and its cophenetic distances in the aggregated
    dendrogram; rows without variance score 0.
    """
    if euclid_full.n != cd_agg.n:
        raise ValueError(f"size mismatch: {euclid_full.n} vs {cd_agg.n}")
    n = euclid_full.n
    e_sq = to_square(euclid_full)
    c_sq = to_square(cd_agg)
    bv = np.empty(n, dtype=np.float64)
    for i in range(n):
        x = np.concatenate((e_sq[i, :i], e_sq[i, i + 1 :]))
        y = np.concatenate((c_sq[i, :i], c_sq[i, i + 1 :]))
        bv[i] = pearson(x, y)
    return bv


def update_weights(weights, bv, floor: float) -> np.ndarray:
    """Additive update w <- max(w - bv, floor); low agreement raises weight."""
    w = np.asarray(weights, dtype=np.float64)
    b = np.asarray(bv, dtype=np.float64)
    if w.shape != b.shape:
        raise ValueError(f"length mismatch: {w.shape} vs {b.shape}")
    if not floor > 0.0:
        raise ValueError(f"weight floor must be positive, got {floor}")
    return np.maximum(w - b, floor)


@dataclass(frozen=True)
class TraceRecord:
    """One boosting iteration: which samples were drawn, how well the recovered
    hierarchy fits, and the post-update weight spread."""

    iteration: int
    subsample: tuple[int, ...]
    cpcc: float
    weight_min: float
    weight_mean: float
    weight_max: float


@dataclass(frozen=True)
class IterationSnapshot:
    """Full intermediate state of one iteration, for inspection hooks."""

    iteration: int
    subsample: np.ndarray
    cd_sub: CondensedMatrix
    consensus: CondensedMatrix
    cd_agg: CondensedMatrix
    bv: np.ndarray
    weights: np.ndarray


@dataclass
class BoostState:
    """Mutable per-run state of the boosting loop."""

    weights: np.ndarray
    iteration: int
    rng: np.random.Generator
    accumulator: ConsensusAccumulator
    trace: list[TraceRecord] = field(default_factory=list)


@dataclass(frozen=True)
class HBoostResult:
    """Final aggregated dendrogram, its consensus matrix, the per-iteration
    trace, and the sample weights after the last update."""

    dendrogram: Dendrogram
    consensus: CondensedMatrix
    trace: tuple[TraceRecord, ...]
    final_weights: np.ndarray


def hboost(
    d: DataMatrix,
    cfg: RunConfig,
    inspect: Callable[[IterationSnapshot], None] | None = None,
) -> HBoostResult:
    """Run the boosted hierarchical clustering ensemble.

    Performs ``cfg.iterations`` rounds of weighted subsampling, base
    clustering with ``cfg.clusterer``, streaming consensus combination with
    ``cfg.combiner``, and recovery with ``cfg.recovery``; the recovered
    dendrogram after the last round is the result. Deterministic for a fixed
    seed. ``inspect``, when given, receives an IterationSnapshot after every
    iteration.
    """
    n = d.n_samples
    m = math.ceil(cfg.subsample_fraction * n)
    if m < 2:
        raise ValueError(
            f"subsample of {m} sample(s) cannot be clustered; raise subsample_fraction"
        )
    data = standardize(d) if cfg.standardize else d
    euclid_full = pairwise_euclidean(data)
    operator = CombineOperator.parse(cfg.combiner)
    state = BoostState(
        weights=np.full(n, 1.0 / n, dtype=np.float64),
        iteration=0,
        rng=np.random.default_rng(cfg.seed),
        accumulator=ConsensusAccumulator.empty(n, operator),
    )

    recovered: Dendrogram | None = None
    consensus_matrix: CondensedMatrix | None = None
    for it in range(1, cfg.iterations + 1):
        sub = weighted_sample(state.weights, m, state.rng)
        dist_sub = subsample_distances(euclid_full, sub)
        base = agglomerate(dist_sub, cfg.clusterer)
        cd_sub = cophenetic(base)
        accumulate(state.accumulator, sub, cd_sub)
        consensus_matrix = consensus(state.accumulator, euclid_full, cfg.fallback)
        recovered = agglomerate(consensus_matrix, cfg.recovery)
        cd_agg = cophenetic(recovered)
        bv = boosted_values(euclid_full, cd_agg)
        state.weights = update_weights(state.weights, bv, cfg.weight_floor)
        state.iteration = it
        state.trace.append(
            TraceRecord(
                iteration=it,
                subsample=tuple(int(s) for s in sub),
                cpcc=cpcc(euclid_full, cd_agg),
                weight_min=float(state.weights.min()),
                weight_mean=float(state.weights.mean()),
                weight_max=float(state.weights.max()),
            )
        )
        if inspect is not None:
            inspect(
                IterationSnapshot(
                    iteration=it,
                    subsample=sub,
                    cd_sub=cd_sub,
                    consensus=consensus_matrix,
                    cd_agg=cd_agg,
                    bv=bv,
                    weights=state.weights.copy(),
                )
            )

    assert recovered is not None and consensus_matrix is not None
    return HBoostResult(
        dendrogram=recovered,
        consensus=consensus_matrix,
        trace=tuple(state.trace),
        final_weights=state.weights,
    )
