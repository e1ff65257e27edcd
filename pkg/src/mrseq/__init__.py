"""Block-based MRI pulse sequence design, Bloch simulation and image reconstruction.

The package is organized as a pipeline:

``model`` (sequence documents) -> ``timeline`` (numeric event timelines) ->
``engine`` (Bloch simulation over a ``phantom``) -> ``recon`` (k-space sorting
and FFT reconstruction).  ``service`` exposes the pipeline over REST with
background simulation jobs; ``cli`` drives it headless.
"""

from mrseq.constants import GAMMA_BAR, GAMMA_RAD

__version__ = "0.1.0"

__all__ = ["GAMMA_BAR", "GAMMA_RAD", "__version__"]
