"""Max-margin nonparametric latent feature models for link prediction."""

from ._medlfrm import (
    BayesMedLFRM,
    Dataset,
    Link,
    MedLFRM,
    SvmProblem,
    TrainConfig,
    auc,
    digamma,
    fit,
    load_dataset,
    predict,
    solve_svm,
    split_holdout,
    synth_generate,
    tail_bound,
    tr_term,
    update_hyper,
)

__all__ = [
    "BayesMedLFRM",
    "Dataset",
    "Link",
    "MedLFRM",
    "SvmProblem",
    "TrainConfig",
    "auc",
    "digamma",
    "fit",
    "load_dataset",
    "predict",
    "solve_svm",
    "split_holdout",
    "synth_generate",
    "tail_bound",
    "tr_term",
    "update_hyper",
]
