"""Trellis-coded power-domain NOMA for two users.

Encoding with an 8-PSK TCM code, superposition at two power levels, joint
detection on the tensor-product trellis or separate detection with SIC,
free-distance analysis and power allocation, and Monte-Carlo BER.
"""
from .channel import BERRecord, ChannelParams, SchemeConfig, apply_channel, run_ber, transmit, transmit_tcma
from .detectors import (DetectionResult, ReceivedFrame, detect_user2_direct, joint_detect, sic_detect_user1,
                        uncoded_ml_detect, viterbi)
from .freedist import DistanceReport, d_dm_sq, d_free_search, d_free_sq, d_parallel_sq, free_distance_event
from .kernels import BACKEND
from .powalloc import PowerSolution, optimal_powers_closed_form, optimal_powers_grid
from .product import PowerPair, ProductTrellis, complexity_estimate, tensor_product
from .trellis import (Constellation, InfoFrame, Trellis, build_ungerboeck_4state, dump_trellis, encode,
                      load_trellis, psk8, psk_point, qpsk, trivial_trellis)

__version__ = "0.1.0"
