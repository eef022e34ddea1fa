"""Control-channel reliability analysis and flexible-slot HARQ simulation for URLLC."""

from .analytics import (
    Enumeration,
    InfeasibleError,
    OutcomeLeaf,
    RegionPoint,
    boundary_bisect,
    enumerate_dl,
    enumerate_ul,
    p_dl_coherent,
    p_dl_verbatim,
    p_ul,
    region_curve,
)
from .error_model import (
    ControlErrorProfile,
    DataBlerProfile,
    FeedbackSignal,
    ProfileError,
    TrialRng,
    detect_feedback,
    sample_event,
    validate_profiles,
)
from .slot_grid import (
    Allocation,
    Direction,
    Mode,
    Numerology,
    SlotFormat,
    SymbolType,
    expand_frequency,
    get_format,
    numerology_from_mu,
    resource_elements,
    validate_usage,
)

__version__ = "0.1.0"
