"""coronalab: harmonic measure, Whitney structure, and corona decompositions
on rough domains, with exact geometric oracles and verifiable Monte Carlo."""

from __future__ import annotations

__version__ = "0.1.0"

from . import errors
from .geometry import (
    Domain,
    make_domain,
    adr_report,
    corkscrew_point,
    whsa_feasibility,
)
from .dyadic import (
    DyadicGrid,
    DiscreteMeasure,
    build_grid,
    dyadic_maximal,
    verify_grid,
)
from .whitney import (
    WhitneyDecomposition,
    build_whitney,
    carleson_box,
    overlap_certificate,
    sawtooth,
    verify_whitney,
    whitney_region,
)

__all__ = [
    "errors",
    "Domain",
    "make_domain",
    "adr_report",
    "corkscrew_point",
    "whsa_feasibility",
    "DyadicGrid",
    "DiscreteMeasure",
    "build_grid",
    "dyadic_maximal",
    "verify_grid",
    "WhitneyDecomposition",
    "build_whitney",
    "carleson_box",
    "overlap_certificate",
    "sawtooth",
    "verify_whitney",
    "whitney_region",
    "__version__",
]
