"""Feature extraction sidecar: turns videos into DEVB feature files consumed
by the devil toolkit. File handoff is the only coupling to the core."""

from .backbones import BackboneError
from .extract import ExtractorConfig, extract
from .formats import FormatError, SidecarError, read_frames, write_devb

__version__ = "0.1.0"
