"""Minimum spanning forests and connected components on a simulated
mesh-connected computer, with exact step accounting."""

__version__ = "0.1.0"

from .estimator import MeshMSF  # noqa: E402
from .msf import MsfResult, run_msf  # noqa: E402
from .oracle import Graph, kruskal_msf, verify  # noqa: E402

__all__ = ["Graph", "MeshMSF", "MsfResult", "kruskal_msf", "run_msf", "verify", "__version__"]
