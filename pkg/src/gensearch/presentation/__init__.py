from .choreography import (
    CrossmodalScorer,
    ImagePlacement,
    assign_images,
    filter_images,
    placement_matrix,
)
from .citations import (
    CitationAttacher,
    CitationEvent,
    CitationWorker,
    EntitySet,
    attach_citations,
    extract_entities,
    identify_citation,
)
from .hungarian import max_weight_assignment, pad_square, solve_min_cost
from .timeline import (
    TimelineEvent,
    TimelineGroup,
    extract_events,
    group_events,
    merge_events,
)

__all__ = [
    "CitationAttacher",
    "CitationEvent",
    "CitationWorker",
    "CrossmodalScorer",
    "EntitySet",
    "ImagePlacement",
    "TimelineEvent",
    "TimelineGroup",
    "assign_images",
    "attach_citations",
    "extract_entities",
    "extract_events",
    "filter_images",
    "group_events",
    "identify_citation",
    "max_weight_assignment",
    "merge_events",
    "pad_square",
    "placement_matrix",
    "solve_min_cost",
]
