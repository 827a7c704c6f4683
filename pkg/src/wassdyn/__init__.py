"""wassdyn: dynamics of Markov operators on Wasserstein spaces of discrete measures."""

__version__ = "0.1.0"

from wassdyn.cli import main  # noqa: E402

__all__ = ["__version__", "main"]
