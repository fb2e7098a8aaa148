from .fusion import (
    ConcatFusion,
    CrossModalFusion,
    DetectionHead,
    FuseLayer,
    Prediction,
    SelfFusion,
    build_global,
    classify,
    fuse,
    predictions_from_logits,
)
from .log_encoder import LogEncoder, pad_or_truncate, sinusoidal_positions
from .metric_encoder import (
    AspectMap,
    CausalConv1d,
    CausalConvStack,
    MetricEncoder,
    encode_inter,
    encode_intra,
    group_by_aspect,
)
from .network import PRESETS, VARIANTS, ArchConfig, HadesNet, Wiring, ablation_config, arch_preset
