"""pulsepipe: streaming Doppler quality gating, FHR and GA estimation,
and cuff-display transcription for low-cost perinatal monitoring."""

from .bp import (BpReading, ClassicalLcdDetector, GrayImage, LcdRegion,
                 decode_digit, locate_lcd, render_lcd, transcribe_bp)
from .config import PipelineConfig, load_config
from .dsp import (HOP_SAMPLES, INTERNAL_RATE_HZ, WINDOW_SAMPLES, RingBuffer,
                  SampleStream, Segment, envelope, power_spectrum, resample,
                  stream_segments)
from .errors import PulsePipeError
from .fhr import FhrEstimate, autocorr_normalized, estimate_fhr
from .ga import AffineFhrScorer, GaEstimate, estimate_ga, select_windows
from .pipeline import (Phase, PipelineSession, SessionEvent, SessionSummary,
                       TickReport, run_stream)
from .quality import (QualityClass, QualityFeatures, QualityLabel, classify,
                      extract_features, quality_report)
from .sessionio import (ParityReport, SessionLog, compare_runs, load_pgm,
                        load_wav, read_session, save_pgm, save_wav,
                        write_session)
from .synth import synth_class, synth_doppler

__version__ = "0.1.0"

__all__ = [
    "AffineFhrScorer", "BpReading", "ClassicalLcdDetector", "FhrEstimate",
    "GaEstimate", "GrayImage", "HOP_SAMPLES", "INTERNAL_RATE_HZ", "LcdRegion",
    "ParityReport", "Phase", "PipelineConfig", "PipelineSession",
    "PulsePipeError", "QualityClass", "QualityFeatures", "QualityLabel",
    "RingBuffer", "SampleStream", "Segment", "SessionEvent", "SessionLog",
    "SessionSummary", "TickReport", "WINDOW_SAMPLES", "autocorr_normalized",
    "classify", "compare_runs", "decode_digit", "envelope", "estimate_fhr",
    "estimate_ga", "extract_features", "load_config", "load_pgm", "load_wav",
    "locate_lcd", "power_spectrum", "quality_report", "read_session",
    "render_lcd", "resample", "run_stream", "save_pgm", "save_wav",
    "select_windows", "stream_segments", "synth_class", "synth_doppler",
    "transcribe_bp", "write_session",
]
