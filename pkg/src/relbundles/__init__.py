"""Relative Cayley graphs, geodesic ray bundles and coded label windows."""

__version__ = "0.1.0"

from .groups import (  # noqa: F401
    GroupSpec,
    Word,
    build_group,
    load_spec,
    spec_from_dict,
    spec_hash,
    validate_presentation,
)
from .relgraph import (  # noqa: F401
    ABSOLUTE,
    RELATIVE,
    DistanceOracle,
    RelativeGraph,
)
from .geodesics import (  # noqa: F401
    DirectionSpec,
    direction_from_text,
    enumerate_geodesics,
    geodesic_dag,
)
from .hyperbolicity import bound_B, bound_K, estimate_nu  # noqa: F401
from .bundles import DirectionPipeline, symdiff_scan  # noqa: F401
from .coding import check_lemma418, h_n_window  # noqa: F401
from .suite import RunConfig, SuiteReport, run_suite  # noqa: F401
