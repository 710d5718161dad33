"""unitgrid: discrete speech-unit tokenization, unit language modeling, and
paired-stimuli evaluation over a (segmentation width, cluster size) grid."""

from .binio import FormatError
from .features import (
    CorpusManifest,
    FeatureMatrix,
    ManifestEntry,
    SyntheticSpec,
    UtteranceRecord,
    generate_synthetic,
    read_features,
    sample_subset,
    write_features,
)
from .segmenter import (
    FixedPlan,
    PooledSequence,
    VariablePlan,
    read_boundaries,
    segment,
    segment_fixed,
    segment_variable,
    width_stats,
    write_boundaries,
)
from .kmeans import Codebook, KMeansConfig, assign, inertia, train_kmeans
from .units import (
    AlignedInterval,
    CorpusStats,
    UnitSequence,
    align_diff,
    corpus_stats,
    deduplicate,
    encode,
    read_unit_corpus,
    write_unit_corpus,
)
from .packing import PackedDataset, pack, read_packed, write_packed
from .ngram import (
    NgramModel,
    NgramScorer,
    ScoreTable,
    load_external_scores,
    perplexity,
    sequence_logprob,
    train_ngram,
    write_external_scores,
)
from .evaluation import (
    EvalReport,
    GridTables,
    SeedAggregate,
    StimulusPair,
    aggregate_seeds,
    evaluate,
    grid_table,
    split_by_category,
)
from .sweep import SweepConfig, SweepResult, emit_report, run_sweep

__version__ = "0.1.0"
