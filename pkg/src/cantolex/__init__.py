"""Human/LLM collaborative emotion lexicon construction and validation."""

__version__ = "0.1.0"

from .lexicon import (
    EMOTION_DIMENSIONS,
    Lexicon,
    LexiconEntry,
    TranslationMap,
    filter_non_neutral,
    lexicon_stats,
    merge_expressions,
    parse_lexicon,
    write_lexicon,
)
from .corpus import (
    Corpus,
    Document,
    SegmenterDictionary,
    load_corpus,
    mine_terms,
    segment_text,
    tfidf,
)
from .annotation import (
    AnnotationRecord,
    Task,
    aggregate_majority,
    build_assignments,
    make_portions,
    sample_half,
    select_annotator_trio,
)
from .reliability import (
    ReliabilityMatrix,
    build_reliability_matrix,
    cohens_kappa,
    krippendorff_alpha,
)
from .llm import ReplayTransport, annotate_batch, build_prompt, validate_response
from .extractor import EmotionProfile, extract
from .evaluator import EvaluationReport, agreement, evaluate_matrix, load_dataset, run_lexicon
from .service import SessionStore, make_server
