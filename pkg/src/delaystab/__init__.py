"""Rapid stabilization of delayed parabolic systems in modal coordinates."""

__version__ = "0.1.0"

from .modal import (  # noqa: E402
    IntervalSet,
    ModalSystem,
    ModelError,
    build_interior_model,
    build_localized_model,
    build_neumann_boundary_model,
    check_assumptions,
)
from .lifting import (  # noqa: E402
    LiftedState,
    adjoint_generator,
    build_lifted_generator,
    embed,
    lifted_spectrum,
)
from .roots import (  # noqa: E402
    CharRoot,
    PreimageQuery,
    lambert_w,
    rightmost_roots,
    solve_preimage,
    spectral_abscissa,
)
from .synthesis import (  # noqa: E402
    FeedbackLaw,
    SynthesisRequest,
    TwoPhaseLaw,
    synthesize,
    synthesize_localized,
)
from .simulate import (  # noqa: E402
    History,
    SimConfig,
    Trajectory,
    estimate_decay_rate,
    fit_constant,
    picard_solve_step,
    simulate_closed_loop,
    simulate_open_loop,
    simulate_two_phase,
    verify_rapid,
)
from .scenario import (  # noqa: E402
    ScenarioError,
    bundled_scenarios,
    export,
    load_scenario,
    run_scenario,
    summary_text,
)
