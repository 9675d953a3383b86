from .augment import AugmentConfig, adjust_photometric, augment, crop_sample, flip_sample
from .dataset import GazeDataset, InputConfig, pose_vector, prepare_inputs
from .manifest import DatasetManifest, ManifestError, load_manifest, load_sample, write_manifest
from .privacy import audit_blur, blur_face
from .sample import GazeSample, SampleError, validate_sample
from .synth import SynthConfig, generate_sample, synth_generate, synth_samples

__all__ = [
    "AugmentConfig",
    "DatasetManifest",
    "GazeDataset",
    "GazeSample",
    "InputConfig",
    "ManifestError",
    "SampleError",
    "SynthConfig",
    "adjust_photometric",
    "audit_blur",
    "augment",
    "blur_face",
    "crop_sample",
    "flip_sample",
    "generate_sample",
    "load_manifest",
    "load_sample",
    "pose_vector",
    "prepare_inputs",
    "synth_generate",
    "synth_samples",
    "validate_sample",
    "write_manifest",
]
