"""twirlkit: symmetric Clifford twirling of Pauli noise in rotation circuits.

The package is organized as a stack: bit-packed Pauli algebra (`paulis`),
tableau Cliffords (`tableau`), structured Pauli channels (`channels`), the
twirl itself — symmetry specs, gadget samplers, exact twirled channels
(`twirl`) — a stabilizer-backed circuit engine for effective fidelities and
bias metrics (`circuits`), a dense density-matrix oracle for small registers
(`dense`), and a CSV-emitting experiment CLI (`cli`).
"""

from .channels import (
    PauliChannel,
    PauliEnsemble,
    avg_noise_strength,
    distance_v,
    expand,
    make_single_qubit_pauli_noise,
    make_white_noise,
    pauli_fidelity,
    unitarity,
)
from .circuits import (
    CliffordLayer,
    HamiltonianModel,
    LogicalCircuit,
    NoiseLayer,
    RotationLayer,
    average_bias,
    build_trotter_circuit,
    corollary_bound,
    effective_fidelity,
    effective_fidelity_batch,
    fermi_hubbard_2d,
    heisenberg_1d,
    heisenberg_2d,
    layer_noise_channel,
    optimal_rescale_coefficient,
    overhead_lower_bound,
    overhead_pec,
    overhead_rescaling,
    rz_axis_noise,
    tfim_2d,
    whitenoise_bias_bound,
)
from .paulis import PauliOp, commutes, parse_pauli, random_pauli, weight
from .tableau import (
    CliffordOp,
    GateSpec,
    apply_gates,
    compose,
    conjugate,
    decompose_gates,
    from_gates,
    gate,
    inverse,
    random_clifford,
)
from .twirl import (
    SymmetrySpec,
    TwirlGadget,
    enumerate_sampler_distribution,
    sample_full_twirl_gate,
    sample_ksparse_twirl_gate,
    twirl_channel,
    twirl_channel_ksparse,
    twirl_general_noise,
)

__version__ = "0.1.0"

__all__ = [
    "PauliOp",
    "commutes",
    "parse_pauli",
    "random_pauli",
    "weight",
    "CliffordOp",
    "GateSpec",
    "apply_gates",
    "compose",
    "conjugate",
    "decompose_gates",
    "from_gates",
    "gate",
    "inverse",
    "random_clifford",
    "PauliChannel",
    "PauliEnsemble",
    "avg_noise_strength",
    "distance_v",
    "expand",
    "make_single_qubit_pauli_noise",
    "make_white_noise",
    "pauli_fidelity",
    "unitarity",
    "SymmetrySpec",
    "TwirlGadget",
    "enumerate_sampler_distribution",
    "sample_full_twirl_gate",
    "sample_ksparse_twirl_gate",
    "twirl_channel",
    "twirl_channel_ksparse",
    "twirl_general_noise",
    "CliffordLayer",
    "HamiltonianModel",
    "LogicalCircuit",
    "NoiseLayer",
    "RotationLayer",
    "average_bias",
    "build_trotter_circuit",
    "corollary_bound",
    "effective_fidelity",
    "effective_fidelity_batch",
    "fermi_hubbard_2d",
    "heisenberg_1d",
    "heisenberg_2d",
    "layer_noise_channel",
    "optimal_rescale_coefficient",
    "overhead_lower_bound",
    "overhead_pec",
    "overhead_rescaling",
    "rz_axis_noise",
    "tfim_2d",
    "whitenoise_bias_bound",
]
