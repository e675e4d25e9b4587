"""Figure generation from sphereflow CSV/JSON run outputs."""

from .render import (
    EmptyInputError,
    MissingColumnError,
    PlotSpec,
    RenderResult,
    render,
)

__version__ = "0.1.0"
