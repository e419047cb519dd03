"""Rating aggregation and rank statistics for human ranking studies."""

from .records import RankingFileError, RankingRecord, analyze, parse_rankings, read_rankings, write_analysis
from .stats import DunnResult, dunn_posthoc, kruskal_wallis, midranks, tie_sum
from .trueskill import BETA, MU0, SIGMA0, TAU, ConvergenceError, Gaussian, Rating, RankingError, rate, rate_all
