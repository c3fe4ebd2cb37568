from uwdehaze.artifacts import emit_artifacts
from uwdehaze.checkpoint import load_checkpoint, save_checkpoint
from uwdehaze.config import TrainConfig, load_train_config
from uwdehaze.datasets import (
    DatasetKind,
    DatasetManifest,
    InMemoryImages,
    ManifestImages,
    UnpairedBatch,
    UnpairedSplit,
    build_manifest,
    holdout_split,
    sample_patch_batch,
    unpaired_split,
)
from uwdehaze.degradation import DegradationParams, synthesize_pairs, synthesize_underwater
from uwdehaze.evaluation import (
    DisentanglementDiagnostics,
    MetricReport,
    disentanglement_diagnostics,
    evaluate,
    restore_image,
    separate_haze,
)
from uwdehaze.hdn import (
    HazeDisentanglementNetwork,
    HdnLossWeights,
    content_image,
    decode,
    disentangled_cyclic_loss,
    encode_haze,
    encode_haze_free,
    feature_adversarial_loss,
    feature_regularization_loss,
    haze_image,
    hdn_total_loss,
)
from uwdehaze.metrics import psnr, ssim
from uwdehaze.networks import ArchitectureConfig
from uwdehaze.restoration import (
    RestorationLossWeights,
    RestorationNetwork,
    cycle_losses,
    image_adversarial_losses,
    regenerate_underwater,
    restore,
    restoration_total_loss,
)
from uwdehaze.state import TrainState, build_state
from uwdehaze.training import LossRecord, LossTrace, train, train_step

__all__ = [
    "ArchitectureConfig",
    "DatasetKind",
    "DatasetManifest",
    "DegradationParams",
    "DisentanglementDiagnostics",
    "HazeDisentanglementNetwork",
    "HdnLossWeights",
    "InMemoryImages",
    "LossRecord",
    "LossTrace",
    "ManifestImages",
    "MetricReport",
    "RestorationLossWeights",
    "RestorationNetwork",
    "TrainConfig",
    "TrainState",
    "UnpairedBatch",
    "UnpairedSplit",
    "build_manifest",
    "build_state",
    "content_image",
    "cycle_losses",
    "decode",
    "disentangled_cyclic_loss",
    "disentanglement_diagnostics",
    "emit_artifacts",
    "encode_haze",
    "encode_haze_free",
    "evaluate",
    "feature_adversarial_loss",
    "feature_regularization_loss",
    "haze_image",
    "hdn_total_loss",
    "holdout_split",
    "image_adversarial_losses",
    "load_checkpoint",
    "load_train_config",
    "psnr",
    "regenerate_underwater",
    "restoration_total_loss",
    "restore",
    "restore_image",
    "sample_patch_batch",
    "save_checkpoint",
    "separate_haze",
    "ssim",
    "synthesize_pairs",
    "synthesize_underwater",
    "train",
    "train_step",
    "unpaired_split",
]
