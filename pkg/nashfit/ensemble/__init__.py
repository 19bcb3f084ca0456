from .bootstrap import BootstrapConfig, pseudo_response, refit_members, replicate_rng, wild_bootstrap
from .learners import (
    AICSelection,
    EnsembleOutput,
    bagging,
    boosting_aic,
    bumping,
    gradient_boost,
)
