"""unitgrid-adapter: bridges audio and SSL feature extraction to the unitgrid
toolkit's file formats."""

from .audio import AudioDecodeError, read_wav, write_wav
from .boundaries import (
    convert_boundaries,
    frames_from_durations,
    snap_times_to_frames,
    write_boundary_file,
)
from .extract import ExtractionSpec, extract_features, prepare_benchmark
from .featfile import write_feature_file, write_manifest
from .models import LogMelFeaturizer, ModelLoadError, load_model

__version__ = "0.1.0"
