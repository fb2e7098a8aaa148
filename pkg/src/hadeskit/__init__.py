"""Log and metric fusion anomaly detection with semi-supervised training."""
from .data import (
    Chunk,
    DatasetSplit,
    LabelSelector,
    MetricFrame,
    ProvenanceRecord,
    RawLogRecord,
    attach_provenance,
    partition_chunks,
    regularize_metrics,
    select_labeled_subset,
    temporal_split,
)
from .estimator import HadesClassifier
from .exceptions import (
    ConfigError,
    DataError,
    HadesError,
    NumericalError,
    ShapeError,
)
from .model import AspectMap, ArchConfig, arch_preset
from .parsing import TemplateMiner, TemplateStore, tokenize
from .training import EvalReport, TrainConfig, evaluate, evaluate_predictions

__version__ = "0.1.0"
