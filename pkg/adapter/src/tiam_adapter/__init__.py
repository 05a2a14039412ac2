"""Reference harness around external text-to-image generators and detectors.

Consumes the prompt dataset file, emits the results file; the scoring
toolkit is driven only through those documented schemas (and its CLI).
"""

from .config import AdapterConfig, AdapterConfigError, load_config
from .harness import (
    DatasetError,
    GenerationItem,
    ItemFailure,
    load_prompts,
    run_detection,
    run_generation,
)
from .stubs import (
    Detector,
    GeneratedImage,
    Generator,
    PromptSpec,
    RawDetection,
    Region,
    StubDetector,
    StubGenerator,
)

__version__ = "0.1.0"
