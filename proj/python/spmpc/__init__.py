"""First-order solvers for predictive control.

Accelerated proximal-gradient methods with restart schemes, structure
exploiting QP solvers for banded predictive-control problems, and a
harmonic tracking formulation, implemented in C++ behind a thin binding.
"""

from ._core import (  # noqa: F401
    BandedCholesky,
    ConstrainedLtiModel,
    DiscreteLtiModel,
    Ellipsoid,
    FomReport,
    HarmonicReference,
    HmpcProblem,
    HmpcProgram,
    HmpcSolution,
    LtiModel,
    MpcIngredients,
    MpcSolveResult,
    MpcVariant,
    MpcWeights,
    MpctIngredients,
    MpctSolveResult,
    RestartReport,
    TerminalIngredients,
    __version__,
    academic_example_model,
    ball_plate_model,
    ball_plate_model_unscaled,
    build_ingredients,
    build_mpct_ingredients,
    chemical_plant_model,
    discretize_zoh,
    expm,
    fista_quadratic,
    harmonic_eval,
    harmonic_rotate,
    optimal_artificial_reference,
    oscillating_masses_bench,
    restart_quadratic,
    run_example31,
    run_mpc_bench,
    set_terminal_ellipsoid,
    solve_box_qp,
    solve_dare,
    solve_ellip_admm,
    solve_hmpc,
    solve_mpct_eadmm,
    solve_std_admm,
    solve_std_fista,
    t_next,
    terminal_ingredients,
)
