"""One-shot and tracking frequency-moment estimators, plus adversarial streams."""

from .hashing import HashFamily, eval_bucket, eval_sign, hash64, new_family
from .sketches import (AmsSketch, MorrisCounter, StableSketch, ams_estimate, ams_merge, ams_ratio,
                       ams_update, stable_estimate, stable_update)
from .stable_dist import ScaleTable, StableSampler, median_scale, sample_stable
from .stream_model import (FrequencyVector, Stream, StreamEvent, StreamMode, apply_event,
                           distinct_count, exact_moment, l1_norm)
from .tracker import (Tracker, TrackReport, ball_stability_experiment, copies_for_tracking,
                      epoch_count, evaluate_tracking)

__all__ = [
    "AmsSketch", "FrequencyVector", "HashFamily", "MorrisCounter", "ScaleTable", "StableSampler",
    "StableSketch", "Stream", "StreamEvent", "StreamMode", "TrackReport", "Tracker",
    "ams_estimate", "ams_merge", "ams_ratio", "ams_update", "apply_event",
    "ball_stability_experiment", "copies_for_tracking", "distinct_count", "epoch_count",
    "eval_bucket", "eval_sign", "evaluate_tracking", "exact_moment", "hash64", "l1_norm",
    "median_scale", "new_family", "sample_stable", "stable_estimate", "stable_update",
]
