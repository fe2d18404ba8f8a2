"""Phased-array RF wireless power transfer: propagation model and beam scanning."""

from .channel import (
    PropagationContext,
    channel_gain_decomposed,
    channel_gain_exact,
    fraunhofer_distance,
    received_waves,
)
from .control import (
    Excitation,
    apply_element_mask,
    far_field_excitation,
    generate_codebook,
    near_field_excitation,
    optimal_excitation,
    quantize_phases,
)
from .geometry import ArraySpec, DirectionUV, EulerAngles, ReceiverPose, build_planar_array, relative_to_anchor
from .rectenna import EfficiencyModel, combined_dc_power, sensor_power, transfer_efficiency
from .scanner import ScanOutcome, beam_scan, simulated_probe

__version__ = "0.1.0"
