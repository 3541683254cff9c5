"""Community-shift analysis on directed weighted retweet networks.

Pipeline: parse interaction records, build per-window retweet graphs,
infer two-block communities with a degree-corrected stochastic block
model, score lexicon-based sentiment, detect users who switch community
between windows, and contrast shifters against stayers with bootstrap
summaries and nonparametric tests.
"""

from .communities import (
    CommunityLabels,
    McmcConfig,
    Partition,
    description_length,
    infer_partition,
    label_communities,
)
from .graph import InteractionGraph, build_graph, filter_by_activity
from .ingest import ParseReport, TimeWindow, TweetRecord, parse_records, window_slice
from .metrics import UserMetrics, betweenness, degrees, pagerank
from .sentiment import SentimentLexicon, SentimentScore, classify, score_text, user_sentiment
from .shift import OverlapReport, ShiftRecord, align, detect_shifters, overlap_report
from .stats import (
    BootstrapSummary,
    TestResult,
    bootstrap_mean,
    delta_sentiment_matrix,
    kruskal_wallis,
    mann_whitney_u,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapSummary",
    "CommunityLabels",
    "InteractionGraph",
    "McmcConfig",
    "OverlapReport",
    "ParseReport",
    "Partition",
    "SentimentLexicon",
    "SentimentScore",
    "ShiftRecord",
    "TestResult",
    "TimeWindow",
    "TweetRecord",
    "UserMetrics",
    "align",
    "betweenness",
    "bootstrap_mean",
    "build_graph",
    "classify",
    "degrees",
    "delta_sentiment_matrix",
    "description_length",
    "detect_shifters",
    "filter_by_activity",
    "infer_partition",
    "kruskal_wallis",
    "label_communities",
    "mann_whitney_u",
    "overlap_report",
    "pagerank",
    "parse_records",
    "score_text",
    "user_sentiment",
    "window_slice",
]
