"""Paper-style figures from exported ladder-DQPT series and event tables."""

from .render import FigureRecipe, load_recipe, render

__version__ = "0.1.0"

__all__ = ["FigureRecipe", "load_recipe", "render", "__version__"]
