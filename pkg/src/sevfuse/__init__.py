"""Tri-modal severity classification pipeline.

Text, audio, and facial descriptors are extracted per participant,
standardized per training fold, concatenated into a 1536-D fused vector,
and classified with a class-weighted softmax gradient-boosted tree model.
Evaluation runs stratified cross-validation with out-of-fold predictions,
bootstrap confidence intervals, decision-curve net benefit, and tree-based
feature attributions.
"""

__version__ = "0.1.0"

AUDIO_DIM = 256
FACE_DIM = 512
TEXT_DIM = 768
FUSED_DIM = AUDIO_DIM + FACE_DIM + TEXT_DIM

# Column ranges of each modality inside the fused vector.
MODALITY_SLICES = {
    "audio": (0, AUDIO_DIM),
    "face": (AUDIO_DIM, AUDIO_DIM + FACE_DIM),
    "text": (AUDIO_DIM + FACE_DIM, FUSED_DIM),
}
