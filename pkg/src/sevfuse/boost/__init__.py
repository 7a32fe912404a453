from .objective import (  # noqa: F401
    ClassWeights,
    grad_hess,
    inverse_class_frequency,
    softmax,
    weighted_ce,
)
from .gbdt import BoostedEnsemble, Tree, TrainConfig, fit_gbdt, predict_proba  # noqa: F401
from .attrib import tree_shap, mean_abs_attribution  # noqa: F401
from .logit import LinearModel, fit_logit, predict_proba_logit  # noqa: F401
