"""Regressors for draw resistance plus shared evaluation utilities.

Three model families are provided, each trainable from a split
:class:`~drawcast.changelog.SampleSet`:

``anfis``   Sugeno fuzzy system with Gaussian-bell premises, initialised
            from subtractive or fuzzy c-means clustering and trained by
            the hybrid least-squares/gradient loop.
``mlffnn``  One-hidden-layer sigmoid network trained by batch gradient
            descent or Levenberg-Marquardt.
``gmdh``    Self-organising network of pairwise quadratic neurons grown
            layer by layer against an external selection criterion.

``metrics`` holds the common MSE/RMSE/R report and the specification-limit
reject flagging; ``serialize`` reads and writes every model as a
self-describing text file.
"""

from drawcast.predictors.anfis import (
    EvalTrace,
    FuzzyRuleBase,
    anfis_eval,
    anfis_eval_batch,
    anfis_init,
    anfis_ls_consequents,
    anfis_premise_gradient,
    anfis_train_hybrid,
    fcm_clusters,
    subtractive_clusters,
)
from drawcast.predictors.gmdh import GmdhNetwork, gmdh_predict, gmdh_train
from drawcast.predictors.metrics import (
    Metrics,
    SpecLimits,
    evaluate_predictions,
    flag_substandard,
)
from drawcast.predictors.mlffnn import (
    MlffnnModel,
    mlffnn_gradient,
    mlffnn_predict,
    mlffnn_train,
)
from drawcast.predictors.serialize import load_model, save_model

__all__ = [
    "EvalTrace",
    "FuzzyRuleBase",
    "GmdhNetwork",
    "Metrics",
    "MlffnnModel",
    "SpecLimits",
    "anfis_eval",
    "anfis_eval_batch",
    "anfis_init",
    "anfis_ls_consequents",
    "anfis_premise_gradient",
    "anfis_train_hybrid",
    "evaluate_predictions",
    "fcm_clusters",
    "flag_substandard",
    "gmdh_predict",
    "gmdh_train",
    "load_model",
    "mlffnn_gradient",
    "mlffnn_predict",
    "mlffnn_train",
    "save_model",
    "subtractive_clusters",
]
