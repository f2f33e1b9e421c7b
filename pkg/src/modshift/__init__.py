"""Model privacy for federated learning through designed shifts.

Agents add ``(gamma @ delta) * ones`` to each round difference, with
``sum(gamma) == -1``, and send the scalar to the server over a secret channel.
The eavesdropper's Fisher information becomes singular while the server
recovers the exact update.
"""

from .errors import (
    ConfigurationError,
    ConstraintViolation,
    DivergenceError,
    DomainError,
    ModShiftError,
    ProtocolError,
    SingularBaseError,
    UsageError,
)
from .fedcore import (
    Delta,
    LocalDataset,
    TrainConfig,
    aggregate,
    compute_delta,
    global_loss,
    local_descent,
    mse_gradient,
    mse_loss,
)
from .shiftdesign import (
    ShiftScheme,
    ShiftedDelta,
    apply_shift,
    free_term_hook,
    make_gamma,
    shift_matrix_rank_deficiency,
    validate_gamma,
)
from .fim import FimContext, build_fim, closed_form_eigenvalues, det_via_mdl, fim_report, is_singular
from .channel import ChannelParams, SecretLedger, bob_receive_and_compensate, eve_observe, transmit
from .adversary import EveState, TamperBoundInputs, alpha, eve_update, tamper_bound, tamper_test
from .baselines import InjectionConfig, bob_denoise, inject
from .experiment import ExperimentConfig, RoundTrace, generate_data, run_experiment

__version__ = "0.1.0"
