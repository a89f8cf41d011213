"""Local polynomial approximation norms, Whitney-type extension and trace
operators on Ahlfors-regular atom clouds, with numerical certification of
the governing inequalities."""

from .approx import (
    ApproxResult,
    PolySpace,
    Projection,
    best_approx,
    build_projection,
    markov_check,
    monotonicity_factor,
    near_best_check,
    remez_check,
)
from .dset import (
    DSet,
    IfsSpec,
    RegularityReport,
    audit_regularity,
    build_dset,
    dist_to_set,
    four_corner_cantor,
    vicsek_cross,
)
from .estimators import BesovSetNorm, CubeAverageTracer, WhitneyExtender
from .exceptions import FractraceError
from .extension import (
    ExtensionField,
    PartitionOfUnity,
    WhitneyExtension,
    build_partition,
    extend,
    trace,
)
from .geometry import (
    CoverFamily,
    Cube,
    DyadicCube,
    NearSetFamily,
    PorousSelection,
    Shell,
    WhitneyCover,
    build_covers,
    build_shells,
    cop_check,
    estimate_porosity,
    near_set_family,
    porous_selection,
    whitney_decompose,
)
from .grids import GridFunction
from .norms import (
    NormParams,
    NormReport,
    besov_norm_on_grid,
    besov_norm_on_set,
    hardy_check,
    porous_summation_check,
    sharp_maximal,
    tl_norm_on_grid,
)


def measure_of_cube(S, cube):
    """Exact weighted atom count of the closed cube (method re-export)."""
    return S.measure_of_cube(cube)


__version__ = "0.1.0"
