"""Wave-packet scattering off a point coupling between two channels.

Channel 1 is free; channel 2 sits on a constant offset ``V0``.  The two are
coupled by ``k0 delta(x)``.  The package offers stationary amplitudes, a
closed-form time-dependent kernel, asymptotic series for the extreme
energy regimes and a Crank-Nicolson grid solver to check them against.
"""

__version__ = "0.1.0"

from .params import (  # noqa: E402
    DomainError,
    PacketParams,
    PhysParams,
    SpatialGrid,
    WaveField,
    gaussian_packet,
    initial_packet,
    momentum_density,
    packet_energy,
    packet_fourier,
)
from .stationary import (  # noqa: E402
    ChannelMomenta,
    DegeneratePolesError,
    PoleSet,
    ScatteringAmplitudes,
    channel_momenta,
    compute_poles,
    flux_balance,
    flux_vs_k,
    scattering_amplitudes,
    stationary_state,
)
from .kernel import (  # noqa: E402
    QuadratureSpec,
    ResidueSelection,
    complex_width,
    contour_split,
    envelope_B,
    free_evolution,
    kappa,
    psi1_scattered,
    psi1_total,
    psi2,
    select_residues,
)
from .oracle import AbsorbingBoundary, OracleConfig, OracleError, evolve, extract_fluxes, step  # noqa: E402
from .series import (  # noqa: E402
    RegimeWarning,
    SeriesParams,
    SeriesResult,
    psi1_series_highE,
    psi1_series_lowE,
    psi2_series_highE,
    psi2_series_lowE,
)
from .analysis import ComparisonReport, ConfigError, ExperimentConfig, channel_norms, l2_distance, load_config, run  # noqa: E402
