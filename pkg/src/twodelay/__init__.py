"""Stability regions of y'(t) + A y(t) + B y(t-1) + C y(t-R) = 0."""

__version__ = "0.1.0"

from .chareq import (  # noqa: E402
    ComplexRoot,
    DdeParams,
    RootCount,
    count_unstable,
    eval_char,
    eval_char_deriv,
    has_positive_real_root,
    is_stable,
    stability,
    unstable_roots,
)
from .bifcurves import (  # noqa: E402
    bif_point,
    degeneracy_line,
    family_structure,
    sample_curve,
    starting_point,
    transition_A,
    transition_point,
)
from .region import (  # noqa: E402
    area_ratio,
    asymptotic_region,
    mrs,
    stable_region_boundary,
    stable_region_raster,
)
from .events import (  # noqa: E402
    EventRecord,
    SpurRecord,
    atlas_sweep,
    event_ladder,
    find_spur,
    find_tangency,
    find_transferral,
)
from .ddesim import (  # noqa: E402
    HistorySpec,
    PlateletParams,
    integrate_linear,
    integrate_platelet,
    linearize_platelet,
    measure_oscillation,
    platelet_equilibrium,
)
