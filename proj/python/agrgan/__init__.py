"""Python bindings for the agrgan C++ core (AGR-GAN at desk scale)."""

from ._core import (
    AGE_GROUPS,
    AgrGan,
    ArgumentError,
    Dataset,
    DimensionError,
    EmbeddingNet,
    FormatError,
    LossWeights,
    NumericalError,
    Oracles,
    ScaleProfile,
    TrainConfig,
    age_to_group,
    aging_eval,
    compute_eer,
    decode_condition,
    denormalize,
    encode_condition,
    generate_synthetic,
    identity_eval,
    load_checkpoint,
    normalize,
    output_diversity,
    pretrain_oracles,
    rank1_accuracy,
    read_dataset,
    roc_auc,
    roc_curve,
    split_by_identity,
    tpr_at_fpr,
    train,
    train_phi,
    verification_eval,
)

__all__ = [name for name in dir() if not name.startswith("_")]
