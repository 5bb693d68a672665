"""Phase retrieval estimators under Poisson and heavy-tailed noise."""

from .core import (
    BilinearEnsemble,
    Ensemble,
    bilinear_apply,
    draw_bilinear_ensemble,
    draw_ensemble,
    eig_hermitian,
    hermitize,
    lifted_apply,
    phaseless_apply,
    random_signal,
)
from .convex import (
    MatrixTrace,
    NuclearBallConfig,
    PsdSolveConfig,
    blinddeconv_solve,
    extract_rank1,
    project_nuclear_ball,
    project_psd,
    psd_ls_solve,
)
from .errors import ConfigError, InvalidArgumentError, NumericFailure
from .metrics import (
    ErrorReport,
    check_dis1,
    dist_modulo_phase,
    error_report,
    lifted_error,
)
from .noise import (
    NoiseModel,
    Observation,
    apply_noise,
    empirical_moment_norms,
    observe,
)
from .wirtinger import (
    SolveTrace,
    WfConfig,
    hard_threshold,
    prior_scaled_init,
    sparse_wf_solve,
    spectral_init,
    truncated_spectral_init,
    wf_solve,
)

__version__ = "0.1.0"
