"""
Coordinated Jaccard similarity.

Sketches with one configuration share the level hash, so a value lands
on the same level in either stream and in their union. Recovering one
level from all three sketches gives coordinated samples: the share of the
union sample present in both input samples estimates |A & B| / |A | B|.
"""

from ..core.errors import EstimationError, ExtractionError, MergeError
from ..core.sampler import SamplerSketch
from ..utils.logging import get_logger
from .inverse import QueryResult, error_bound

logger = get_logger(__name__)


def jaccard(a: SamplerSketch, b: SamplerSketch) -> QueryResult:
    """
    Estimate the Jaccard similarity of the supports of two streams.

    Raises:
        MergeError: if the sketches are not merge-compatible
        EstimationError: if the union is empty or any recovery fails
    """
    if not a.compatible(b):
        raise MergeError("sketches differ in configuration or seed")
    union = a.merge(b, 1)
    selection = union.select()
    if selection.is_empty:
        raise EstimationError("both streams are empty")

    try:
        union_sample = union.extract_at(selection, fallbacks=0)
        sample_a = a.extract_at(selection, fallbacks=0)
        sample_b = b.extract_at(selection, fallbacks=0)
    except ExtractionError as e:
        raise EstimationError(f"coordinated recovery failed: {e}") from e
    if union_sample.is_empty:
        raise EstimationError("union sample is empty")

    shared = sum(1 for k in union_sample.entries if k in sample_a and k in sample_b)
    value = shared / len(union_sample)
    logger.debug(
        "jaccard_estimated",
        sketch_level=selection.level,
        union_size=len(union_sample),
        shared=shared,
        value=value,
    )
    return QueryResult(value, error_bound(union_sample))
