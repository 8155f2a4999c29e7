"""Networks, baselines and checkpoints."""
from .baselines import (
    MarginalModel,
    NBModel,
    load_baseline,
    marginal_fit,
    marginal_predict,
    naive_bayes_fit,
    naive_bayes_predict,
    save_baseline,
)
from .distributions import truncate_renormalize
from .network import (
    MLP,
    SFNET,
    Architecture,
    SFNetParams,
    closed_form_param_count,
    init_params,
    mlp_forward,
    predict_proba,
    record_forward,
    sfnet_forward,
)

__all__ = [
    "MLP",
    "SFNET",
    "Architecture",
    "MarginalModel",
    "NBModel",
    "SFNetParams",
    "closed_form_param_count",
    "init_params",
    "load_baseline",
    "marginal_fit",
    "marginal_predict",
    "mlp_forward",
    "naive_bayes_fit",
    "naive_bayes_predict",
    "predict_proba",
    "record_forward",
    "save_baseline",
    "sfnet_forward",
    "truncate_renormalize",
]
