"""Cycle-compressed residual forecasting for long univariate time series."""

from .backend import backend_name
from .frames import (CycleFrame, DayCategory, HolidayCalendar, WindowSample,
                     build_samples, categorize, compress, decompress,
                     metadata_vector, persistence_baseline, residual_frame,
                     rhp, rhp_baseline)
from .model import ForecastModel, ModelConfig
from .series import (NormStats, SplitSpec, TimeSeries, denormalize,
                     fill_missing, fit_norm, load_csv, normalize, resample,
                     split, write_csv)
from .training import MetricsReport, TrainConfig, evaluate, train

__version__ = "0.1.0"
