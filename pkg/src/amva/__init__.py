"""amva: batch analytics over face-recognition activation maps.

Per-pixel variation statistics across image-quality cohorts, error-versus-
reject curves, quantile overlap matrices, score-weighted activation mapping,
and deterministic heatmap/overlay/histogram rendering.
"""

from .errors import (
    AmvaError,
    BadMagicError,
    ConfigError,
    CsvFormatError,
    DataError,
    ManifestError,
    NonFiniteValuesError,
    TensorFormatError,
    TruncatedFileError,
    UnsupportedDtypeError,
    VersionMismatchError,
)
from .tensor_io import (
    ActivationStack,
    ComparisonSet,
    Manifest,
    Pair,
    QualityTable,
    read_manifest,
    read_pairs_csv,
    read_quality_csv,
    read_tensor,
    tensor_from_bytes,
    tensor_to_bytes,
    write_tensor,
)
from .partition import (
    OverlapMatrix,
    QuantileSet,
    overlap_matrix,
    overlap_ratio,
    select_quantile,
)
from .stat_maps import (
    MapKind,
    MapMeta,
    StatMap,
    ad_mam,
    am_mv,
    am_v,
    cross_method_d_am_v,
    d_am_mv,
    d_am_v,
    mam,
    mdam,
    save_stat_map,
)
from .erc import ErcCurve, ErcPoint, erc_curve, fnmr_at, threshold_at_fmr
from .scorecam import (
    ChannelActivations,
    LinearProjectionEvaluator,
    MeanPixelEvaluator,
    SubprocessEvaluator,
    normalize_channel,
    scorecam_map,
    softmax,
    upsample_bilinear,
)
from .render import (
    COLORMAPS,
    Colormap,
    RenderSpec,
    apply_colormap,
    histogram,
    overlay,
    panel,
)

__version__ = "0.1.0"
