"""Blind time-domain speech masking with ideal-mask baselines and objective metrics."""

__version__ = "0.1.0"

from .audio import (AudioBuffer, AudioError, AudioReadError, MixSpec, UnsupportedFormatError,
                    frame_split, concat_frames, generate_ssn, mix_at_snr, normalize_peak, read_wav,
                    resample, write_wav)
from .noise import DateEstimate, FractionTMin, date_estimate
from .bam import BamParams, FrameDecision, bam_process
from .tfmasks import (BinaryMask, GammatoneBank, default_bank, gammatone_analyze, ibm_compute,
                      ibm_process, mask_resynthesize, read_mask, tbm_compute, tbm_process, tf_energy,
                      write_mask)
from .metrics import InsProfile, StoiScore, ins_compute, ins_max, stoi, stoi_normalized, surrogate

__all__ = [
    "__version__",
    "AudioBuffer", "AudioError", "AudioReadError", "UnsupportedFormatError", "MixSpec",
    "read_wav", "write_wav", "frame_split", "concat_frames", "normalize_peak", "mix_at_snr",
    "resample", "generate_ssn",
    "DateEstimate", "FractionTMin", "date_estimate",
    "BamParams", "FrameDecision", "bam_process",
    "GammatoneBank", "BinaryMask", "default_bank", "gammatone_analyze", "tf_energy",
    "ibm_compute", "tbm_compute", "mask_resynthesize", "ibm_process", "tbm_process",
    "write_mask", "read_mask",
    "StoiScore", "InsProfile", "stoi", "stoi_normalized", "ins_compute", "ins_max", "surrogate",
]
