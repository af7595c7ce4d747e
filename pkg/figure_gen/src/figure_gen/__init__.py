"""Figure rendering for decompounding experiment outputs."""

from .render import SpecError, render

__all__ = ["SpecError", "render"]
