"""Spoofing detection from received-signal-strength frame sequences.

Pipeline: a synthetic multipath channel produces RSS vectors on a grid of
locations; a position-change detector (a pair classifier, or one of the
distance/k-means baselines) compares frames; Louvain groups frames into
regions; the revisit statistic over the region sequence flags attacks.
"""

from .channel_sim import (MultipathModel, Point3, ReceiverSpec, default_environment, rss_true,
                      rss_vector_estimate, sample_block)
from .community import FrameGraph, Partition, build_graph, louvain, modularity, region_sequence
from .dataset import (DIFFERENT, SAME, LocationDataset, MeasurementGrid, PairSet, build_pairs,
                      collect_dataset, generate_grid, load_dataset, save_dataset)
from .spoof_detector import (ATTACK, GENERAL, NO_ATTACK, PAPER_LITERAL, SdModel, calibrate_threshold_h0,
                       detect, statistic)
from .errors import DegenerateCalibrationError, InfeasibleScenarioError, ParseError, SchemaError
from .pcd import (DbcDetector, DnncDetector, KmcDetector, calibrate_threshold, fit_dbc, fit_kmc,
                  load_detector, save_detector, train_dnnc)

__version__ = "0.1.0"
