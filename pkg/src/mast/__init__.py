"""Attention-control toolkit: mass allocation, temperature scaling, detail injection."""

__version__ = "0.1.0"

from .adain import adain, region_adain_init
from .allocation import (LogitGroups, MassTargets, apply_lama, attention_output,
                         compute_bias, compute_bias_single, group_masses,
                         group_slices, logit_groups_from_features,
                         partition_log_z, targets_from_masks)
from .anchoring import QueryPair, anchor_queries
from .config import PipelineConfig, load_config
from .detail import (HighPassSpec, ResidualFeatures, discrepancy_weight,
                     extract_high_freq, gaussian_highpass_mask, inject_details)
from .diagnostics import (attention_entropy_profile, boundary_band_stats,
                          laplacian_map, paired_composite_experiment)
from .masks import (MaskSet, load_mask, resample_to_tokens, smooth_mask,
                    validate_feasibility)
from .numerics import (channel_stats, cosine_similarity, fft2, ifft2, log_p_max,
                       logsumexp, softmax)
from .pipeline import SyntheticScene, StepReport, generate_fixture, run_step, \
    sweep_pi_star
from .temperature import (CalibrationDataset, SharpnessGap, TemperatureModel,
                          apply_sts, fit_temperature_model, predict_temperature,
                          sharpness_gap, solve_temperature, synthesize_calibration)
from .tensorio import read_tensor, tensor_digest, write_tensor

__all__ = [name for name in dir() if not name.startswith("_")]
