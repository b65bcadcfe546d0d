"""Predictive collision risk areas for vehicle-pedestrian interactions."""

from types import ModuleType as _ModuleType

from pcra.dataset import RangeScaler, SplitSpec, extract_windows, split_scenes
from pcra.exceptions import (
    ArtifactError,
    CatalogError,
    ConfigurationError,
    DegenerateScalerError,
    IngestError,
    InvalidTrajectoryError,
    NoCoverageError,
    PcraError,
    ShapeError,
    TrainingError,
)
from pcra.geometry import sector_to_polygon, sectors_overlap
from pcra.io import ingest, prepare_scenes, read_trajectory_csv, write_trajectory_csv
from pcra.lstm import CATALOG, LstmModel, LstmRegressor, ModelConfig, forecast, rollout, train
from pcra.pipeline import PcraAssessor, SiteConfig
from pcra.risk import (
    DistributionStore,
    EmpiricalDist,
    PcraSector,
    ZoneDistributions,
    ZoneGrid,
    band_bounds,
    build_pcra,
    confidence_band,
    dkw_epsilon,
    ecdf_eval,
)
from pcra.severity import SceneAssessment, SeverityLevel, aggregate_corpus, classify_timestep
from pcra.simulate import SimSpec, simulate
from pcra.trajectory import (
    ObjectClass,
    Point,
    Scene,
    Trajectory,
    VelocityVector,
    points_to_velocities,
    velocities_to_points,
)

__version__ = "0.1.0"

__all__ = [name for name, obj in globals().items() if not name.startswith("_") and not isinstance(obj, _ModuleType)]
