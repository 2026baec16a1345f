"""Distribution-free signed sequential rank CUSUM charts."""
from .calibrate import (CalibrationRequest, CalibrationResult, estimate_ic_arl,
                        published_limit, solve_control_limit)
from .distlab import (DistributionSpec, fit_kde, normal, parse_distribution, skew_normal,
                      student_t, theta0, theta1, uniform)
from .engine import (BOTH, LOWER, UPPER, ChartError, CusumConfig, CusumState, SignalReport,
                     StreamSummary, changepoint_estimate, reset_chart, run, run_xi, step)
from .monitor import Monitor, MonitorConfig, MonitorRecord, monitor_stream
from .phase1 import (Phase1Design, design_dispersion, design_from_data, design_location,
                     estimate_sigma, theta0_hat, theta1_hat)
from .scores import ScoreKind, ScoreSpec, score_spec, xi, xi_dispersion, xi_location
from .seqrank import RankAccumulator, SignedRank, sequential_ranks

__version__ = "0.1.0"
