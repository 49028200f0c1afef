"""Observational entropy for generalized quantum measurements."""

from .coarsegrain import (
    CoarseGraining,
    CoarseGrainingVector,
    DensityMatrix,
    OutcomeTable,
    PovmElement,
    QuantumOperation,
    apply,
    compose,
    find_refinement,
    is_finer,
    outcome_table,
    povm_element,
    povm_elements,
    projective_cg,
    rank1_basis_cg,
    trivial_cg,
)
from .entropy import (
    EntropyValue,
    GridFunction,
    check_equality_conditions,
    kl_decomposition,
    observational,
    observational_grid,
    von_neumann,
)
from .errors import (
    CapacityError,
    InconsistencyError,
    InferenceError,
    ObsentropyError,
    SaturationError,
    ShapeError,
    ValidationError,
)
from .indirect import (
    ProbeProtocol,
    full_swap_protocol,
    induced_cg,
    optimal_probe_entropy,
    partial_swap_protocol,
    protocol_entropy,
    swap_unitary,
)
from .pointer import (
    LimitConfig,
    PointerConfig,
    SchemeConfig,
    limit_scheme,
    make_grid,
    repeated_contacts,
    repeated_measurements,
    scheme_entropy,
    single_measurement,
)
from .presets import H50, H51, M49, matrix_preset, qubit_state
from .tomography import InferenceInput, InferenceResult, check_saturation, infer_state

__version__ = "0.1.0"
