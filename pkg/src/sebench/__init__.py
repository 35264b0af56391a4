"""sebench: corpus construction and validation toolkit for SE-domain NLP models."""

from .bayes import PairedDifferences, PosteriorSummary, correlated_t_test, signed_rank_test
from .evaluation import (
    Confusion,
    LabeledDataset,
    LabeledItem,
    builtin_backends,
    confusion_counts,
    lopo_folds,
    macro_metrics,
    metrics,
    repeated_cv_folds,
    run_eval,
)
from .mlm import (
    MaskedExample,
    PredictionSet,
    baseline_backend,
    http_backend,
    load_examples,
    render_report,
    run_benchmark,
)
from .pipeline import (
    CleanDocument,
    Document,
    LanguageDetector,
    PipelineConfig,
    Source,
    Step,
    run_pipeline,
)
from .pretrain import LengthHistogram, TrainingInstance, length_stats, make_instances
from .vocab_analysis import (
    count_continuation_pieces,
    coverage,
    cross_tokenize_oov,
    overlap,
)
from .wordpiece import TokenizerModel, Vocabulary, detokenize, tokenize, train_vocab

__version__ = "0.1.0"
