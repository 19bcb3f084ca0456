from .predict import Prediction, SolverParams, forecast, predict_one
from .metrics import (
    BiasVarianceReport,
    MetricsReport,
    bias_variance,
    constant_mean_forecast,
    mse_decomposition,
    naive_last_forecast,
    naive_scale,
    score,
    score_forecast,
)
