"""The one flatten -> simulate -> reconstruct -> serialize path.

Both the CLI and the REST service call :func:`run_pipeline`, so results from
either surface are byte-identical for equal inputs (provenance carries no
timestamps, and the engine's reduction order is thread-count independent).
"""

from __future__ import annotations

from mrseq import engine, model, recon, resultfile, timeline
from mrseq.phantom import Phantom

__all__ = ["run_pipeline"]


def run_pipeline(doc: model.SequenceDoc, phantom: Phantom, cfg: engine.SimConfig,
                 phantom_name: str, progress=None, cancel=None) -> bytes:
    """Simulate ``doc`` over ``phantom`` and serialize the result file bytes."""
    tl = timeline.flatten(doc)
    raw = engine.simulate(tl, phantom, doc.scanner, cfg, progress, cancel=cancel)
    k = recon.sort_kspace(raw)
    provenance = {
        "sequence_sha256": resultfile.sequence_hash(model.save(doc)),
        "phantom": phantom_name,
        "dt_rf": cfg.dt_rf,
        "dt_grad": cfg.dt_grad,
    }
    image = recon.reconstruct(k, provenance)
    return resultfile.write_result(raw, k, image, provenance)
