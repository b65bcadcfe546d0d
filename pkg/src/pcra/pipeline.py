"""Site configuration and the end-to-end risk assessor."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from functools import partial
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from pcra.dataset import window_arrays
from pcra.exceptions import ConfigurationError
from pcra.geometry import DEFAULT_ARC_SEGMENTS
from pcra.lstm import CATALOG, LstmModel, LstmRegressor, evaluate_trajectory_mse
from pcra.risk import DistributionStore, ZoneGrid, build_distributions
from pcra.severity import SceneAssessment, assess_scene
from pcra.trajectory import Feature, ObjectClass, Scene

_LOG = logging.getLogger(__name__)

DEFAULT_MODELS = {
    "vehicle": {"speed": "Deep-TP-3-10", "degree": "Deep-TP-3-10"},
    "pedestrian": {"speed": "Deep-TP-3-10", "degree": "Deep-TP-3-10"},
}


@dataclass(frozen=True)
class SiteConfig:
    site_id: str = "site"
    roi: tuple[float, float, float, float] = (-60.0, -12.0, 60.0, 12.0)
    n_zones: int = 12
    sample_rate_hz: float = 5.0
    horizons_s: tuple[float, ...] = (1.0, 2.0, 3.0)
    alpha: float = 0.05
    n_min: int = 20
    smoothing_window: int = 3
    models: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_MODELS)))
    epochs: int = 80
    batch_size: int = 32
    learning_rate: float = 1e-3
    train_fraction: float = 0.7
    arc_segments: int = DEFAULT_ARC_SEGMENTS
    units_to_m: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "roi", tuple(float(v) for v in self.roi))
        object.__setattr__(self, "horizons_s", tuple(float(h) for h in self.horizons_s))
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.sample_rate_hz <= 0:
            raise ConfigurationError("sample_rate_hz must be positive")
        if not self.horizons_s:
            raise ConfigurationError("at least one horizon is required")
        for h in self.horizons_s:
            steps = h * self.sample_rate_hz
            if h <= 0 or abs(steps - round(steps)) > 1e-6:
                raise ConfigurationError(f"horizon {h}s is not a whole number of samples at {self.sample_rate_hz} Hz")
        for cls in ObjectClass:
            for feat in Feature:
                name = self.models.get(cls.value, {}).get(feat.value)
                if name not in CATALOG:
                    raise ConfigurationError(f"models.{cls.value}.{feat.value}: unknown catalog model {name!r}")
        ZoneGrid(self.roi, self.n_zones)

    @property
    def grid(self) -> ZoneGrid:
        return ZoneGrid(self.roi, self.n_zones)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["roi"] = list(self.roi)
        d["horizons_s"] = list(self.horizons_s)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SiteConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown site config keys: {sorted(unknown)}")
        data = dict(data)
        if "models" in data:
            models = json.loads(json.dumps(DEFAULT_MODELS))
            for c, feats in data["models"].items():
                models.setdefault(c, {}).update(feats)
            data["models"] = models
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "SiteConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def override(self, **changes) -> "SiteConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def train_models(scenes: Sequence[Scene], config: SiteConfig) -> dict[tuple[ObjectClass, Feature], LstmModel]:
    """Fit the four speed/degree networks (one per class and feature)."""
    models = {}
    for k, (cls, feat) in enumerate((c, f) for c in ObjectClass for f in Feature):
        name = config.models[cls.value][feat.value]
        X, y, _ = window_arrays(scenes, feat, cls, CATALOG_WINDOW)
        if len(y) == 0:
            raise ConfigurationError(f"no {cls.value} {feat.value} training windows")
        est = LstmRegressor(
            name=name,
            feature=feat.value,
            epochs=config.epochs,
            batch_size=config.batch_size,
            learning_rate=config.learning_rate,
            seed=config.seed + k,
        ).fit(X, y, object_class=cls.value)
        _LOG.info("trained %s %s (%s): final loss %.3g", cls.value, feat.value, name, est.loss_curve_[-1])
        models[(cls, feat)] = est.model_
    return models


CATALOG_WINDOW = 3


def assess_scenes(scenes, models, store, config: SiteConfig, n_jobs: int = 1) -> list[SceneAssessment]:
    """Assess scenes, optionally across processes; output order follows input order."""
    run = partial(assess_scene, models=models, store=store, alpha=config.alpha, arc_segments=config.arc_segments)
    if n_jobs <= 1 or len(scenes) < 2:
        return [run(s) for s in scenes]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(run, scenes, chunksize=max(1, len(scenes) // (4 * n_jobs))))


class PcraAssessor(BaseEstimator):
    """Train on scenes, then grade new scenes as danger / warning / relative safe.

    ``fit`` trains the speed and degree networks of both object classes and
    collects the zone/horizon displacement distributions. ``assess`` returns
    per-timestep detail; ``predict`` returns one verdict label per scene
    (``"skipped"`` when the scene cannot be assessed). With ``n_jobs > 1``
    scenes are assessed in worker processes; results keep input order.
    """

    def __init__(self, config: SiteConfig | None = None, n_jobs: int = 1):
        self.config = config
        self.n_jobs = n_jobs

    def _cfg(self) -> SiteConfig:
        return self.config if self.config is not None else SiteConfig()

    def fit(self, scenes: Sequence[Scene], y=None):
        cfg = self._cfg()
        self.models_ = train_models(scenes, cfg)
        self.store_ = build_distributions(scenes, cfg.grid, cfg.horizons_s, cfg.n_min, cfg.alpha)
        return self

    def assess(self, scenes: Sequence[Scene]) -> list[SceneAssessment]:
        check_is_fitted(self, "store_")
        cfg = self._cfg()
        return assess_scenes(scenes, self.models_, self.store_, cfg, self.n_jobs)

    def predict(self, scenes: Sequence[Scene]) -> np.ndarray:
        return np.array([a.verdict.label if a.verdict is not None else "skipped" for a in self.assess(scenes)])

    def evaluate(self, scenes: Sequence[Scene], preceding_fraction: float = 2.0 / 3.0):
        check_is_fitted(self, "models_")
        return [
            evaluate_trajectory_mse(
                self.models_[(cls, Feature.SPEED)], self.models_[(cls, Feature.DEGREE)], scenes, cls, preceding_fraction
            )
            for cls in ObjectClass
        ]
