"""Deterministic vitreoretinal surgery training simulator and analytics."""

from .config import TaskConfig, load_config
from .geometry import (
    CalibrationOffset,
    EyeModel,
    Hand,
    InstrumentKind,
    InstrumentState,
    Pose,
    TouchEpisodeTracker,
    TrocarRig,
    geodesic_distance_mm,
    map_controller_pose,
    retina_raycast,
    sphere_contact,
    update_touch,
)
from .sessionlog import (
    MetricsTable,
    SessionHeader,
    SessionLog,
    export_metrics,
    read_log,
    replay,
    write_log,
)
from .analytics import (
    EffectSize,
    GroupSummary,
    cohens_d,
    cohens_d_from_values,
    heatmap,
    ring_mass,
    summarize,
)
from .mixedmodel import LmmFit, LmmSpec, fit_lmm
from .synth import EXPERT, NOVICE, SkillProfile, generate_session
from .tasks import (
    MetricsReport,
    TaskKind,
    TaskState,
    TickInput,
    finalize_metrics,
    init_task,
    tick,
)

__version__ = "0.1.0"
