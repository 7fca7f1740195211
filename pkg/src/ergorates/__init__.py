"""Convergence rates of ergodic time averages from density-of-states bounds."""
from .dos import (
    IDENTITY,
    SQUARE_ROOT,
    DoSBudget,
    IntegrabilityError,
    PowerLawDoS,
    SymbolFunction,
    bound_constant,
    capital_psi_powerlaw,
    capital_psi_tabulated,
    predicted_defect_bound,
    psi_l1,
    psi_weighted,
    rate_exponent,
    rate_exponent_powerlaw,
    schrodinger_dos,
    sphere_area,
    symbol,
    wave_dos,
)
from .pde import (
    DIVERGES,
    LowFrequencyDivergence,
    RadialField,
    WaveInitialData,
    WaveSystemField,
    global_lq_norm,
    make_field,
    schrodinger_defect_timedomain,
    schrodinger_measure,
    wave_average_defect,
    wave_measure,
    wave_split,
)
from .rates import (
    DegenerateFit,
    DKReport,
    RateFit,
    dk_condition_i,
    dk_condition_ii,
    dk_equivalence_report,
    loglog_fit,
)
from .spectral import (
    DefectSample,
    HermitianModel,
    SpectralMeasure,
    defect_curve,
    fejer_defect,
    geometric_times,
    kernel_projection_norm,
    sinc,
    time_average_exact,
    time_domain_defect,
)

__version__ = "0.1.0"
