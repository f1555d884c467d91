"""Limited-feedback beam quantizers for uniform planar arrays."""

from .analysis import (FeedbackAllocation, allocate_feedback, complexity_budget,
                       expected_gain, gamma_sq, gbc_closed, gbq_lower, order_stat_gain)
from .channel import (PathSet, UpaGeometry, WidebandGrid, array_response, narrowband_channel,
                      path_2d, sample_paths, wideband_channel)
from .codebooks import (analytic_covariance, combiner_codebook, dft_codebook,
                        refinement_grid)
from .config import ExperimentConfig
from .errors import UpaQuantError
from .narrowband import (NarrowbandQuantizer, beam_quantize, enhanced_kp_baseline,
                         kp_baseline, mimo_quantize, rayleigh_weight)
from .runner import GainReport, run_trials
from .wideband import WidebandQuantizer, partition_rbs, wideband_overhead

__version__ = "0.1.0"
