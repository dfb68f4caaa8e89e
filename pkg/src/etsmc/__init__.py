"""Event-triggered sliding mode control of single-input LTI systems.

The package designs and simulates zero-order-hold sliding mode
controllers whose update instants are generated by state-dependent
trigger rules built around a cone of sliding surfaces, and verifies the
guaranteed positive lower bounds on the inter-event times.
"""

from .controller import (
    ControlLaw,
    GainCheck,
    GainSchedule,
    Mode,
    RuleSet,
    SupervisorMode,
    check_gain_condition,
    control_law_const,
    control_law_state_gain,
    gain_value,
    supervisor_step,
)
from .engine import (
    MonitorReport,
    SimConfig,
    SimResult,
    TriggerRecord,
    refine_trigger_time,
    rk4_step,
    simulate,
)
from .errors import (
    ConfigurationError,
    ContractError,
    DesignError,
    DimensionError,
    EtsmcError,
    NumericalError,
    SimulationError,
)
from .geometry import (
    SlidingConfig,
    SurfaceValidation,
    SurfaceVerdict,
    cone_angle,
    cone_coordinates,
    in_ideal_cone,
    in_practical_cone,
    omega_bound,
    sliding_value,
    validate_surfaces,
)
from .linalg import (
    DEFAULT_TOLS,
    Tolerances,
    char_poly,
    induced_norm2,
    is_hurwitz,
    routh_first_column,
    solve_lyapunov,
    symmetric_eigs,
)
from .plant import (
    DisturbanceSpec,
    LtiModel,
    disturbance_eval,
    plant_derivative,
    to_regular_form,
)
from .reports import (
    bound_rows,
    design_report,
    render_design_report,
    render_verification_report,
    theta_fraction,
    verification_report,
    write_summary_json,
    write_trajectory_csv,
    write_triggers_csv,
)
from .scenarios import (
    BUILTIN_NAMES,
    Scenario,
    builtin_scenario,
    load_scenario,
    quadrotor_template,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
from .triggers import (
    BoundPair,
    EtmConfig,
    PracticalBounds,
    Strategy,
    TriggerState,
    asymptotic_floor_direction,
    bound_T_i1,
    bound_T_i2,
    bound_practical,
    commit_trigger,
    direction_rule,
    magnitude_rule,
    parse_strategy,
    practical_magnitude_rule,
    rho_gamma_mu,
    should_trigger,
    would_trigger,
)

__version__ = "0.1.0"
