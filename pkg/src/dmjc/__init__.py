"""Deep multi-view joint clustering.

Per-view MLP autoencoder branches, a KL-divergence self-training objective,
and two fusion schemes: implicit fusion in the soft assignment (dmjc_s) and
explicit fusion in the auxiliary target (dmjc_t), plus the single-view and
separate-clustering baselines, evaluation metrics, and a CLI pipeline.
"""

from .assignment import (
    DecHyper,
    assignment_gradients,
    init_view_centroids,
    kl_loss,
    soft_assignment,
    student_t_kernel,
    target_distribution,
)
from .autoencoder import (
    MlpParams,
    MlpSpec,
    encode,
    encoder_grads,
    init_params,
    pretrain,
    reconstruction_grad,
)
from .config import ConfigError, RunConfig, load_config, save_config
from .data import (
    DataError,
    default_confusion_plan,
    load_feature_matrix,
    load_labels,
    make_synthetic,
    normalize,
    save_matrix_binary,
    save_matrix_csv,
)
from .dmjc_s import ImportanceWeights, dmjc_s_gradients, importance_softmax, multiview_soft_assignment
from .dmjc_t import (
    ApgConfig,
    ApgResult,
    ViewWeights,
    dmjc_t_network_gradients,
    fused_target,
    objective_t,
    simplex_project,
    solve_w_apg,
)
from .kmeans import KmeansResult, assign, kmeans
from .metrics import ari, clustering_accuracy, nmi
from .numerics import Adagrad, Adam, SgdMomentum, make_optimizer, make_rng
from .pipeline import RunReport, emit_report, run_pipeline
from .training import (
    DivergenceError,
    MultiViewState,
    OptimizerSettings,
    TrainHistory,
    dec_train,
    dmjc_s_train,
    dmjc_t_train,
    predict_dec,
    predict_s,
    predict_t,
)

__version__ = "0.1.0"
