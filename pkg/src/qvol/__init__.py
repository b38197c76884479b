"""Brownian price paths with quantum-uncertain volatility."""

__version__ = "0.1.0"

from .analysis import (  # noqa: E402
    MomentSet,
    conditional_vol_trajectory,
    ks_statistic,
    mixture_kurtosis_oracle,
    moments,
    relative_excess_kurtosis,
)
from .engine import (  # noqa: E402
    PathEnsemble,
    SimConfig,
    ensemble_stats,
    simulate,
    simulate_case1,
    simulate_case1_hamiltonian,
    simulate_case2_bayes,
    step_increment,
)
from .errors import *  # noqa: E402,F401,F403
from .pde import gaussian_density, mean_square_vol, solve_kbe  # noqa: E402
from .pricing import bachelier_call, empirical_call_price, implied_normal_vol, surface  # noqa: E402
from .volstate import (  # noqa: E402
    SigmaGrid,
    VolState,
    bayes_update,
    collapse_joint,
    gaussian_band_prob,
    kernel_transition,
    make_uniform_grid,
    max_entropy_state,
    sample_index,
)
