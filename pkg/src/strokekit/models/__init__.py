from .io import dumps_model, load_model, model_from_dict, model_to_dict, save_model
from .kernels import KernelSpec, kernel_matrix
from .scaler import Scaler, apply_scaler, fit_scaler
from .search import grid_search, kfold_indices
from .svm import (
    BinaryMachine,
    SvmModel,
    SvrModel,
    TrainConfig,
    decision_values,
    predict_svc,
    predict_svc_batch,
    predict_svr,
    predict_svr_raw,
    train_svc,
    train_svr,
    vote_margin,
)
