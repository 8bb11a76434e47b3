"""Python bindings for the EDTL C++ core."""

from ._edtl import (  # noqa: F401
    AnomalySpec,
    Dataset,
    EDTLModel,
    EDTLOptions,
    FeatureSchema,
    NetworkParams,
    PretrainedModel,
    ScalerParams,
    SVRHyperParams,
    SVRModel,
    TrainConfig,
    apply_scaler,
    drying_constant,
    fit_standardize,
    fit_svr,
    inject_anomalies,
    invert_scaler,
    knn_predict,
    load_csv,
    load_edtl,
    mape,
    median_gamma,
    predict_edtl,
    predict_svr,
    pretrain,
    rbf_kernel,
    save_edtl,
    select_columns,
    select_features,
    simulate_pair,
    split,
    subsample_fraction,
    train_edtl,
    write_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")]
