from .assignment import AssignmentError, AssignmentPlan, plan_assignments
from .records import DEFAULT_REPLAY_LIMIT, DirectionJudgment, load_direction_judgments
from .store import AnnotationStore, DuplicateSubmission

__all__ = [
    "AssignmentError",
    "AssignmentPlan",
    "plan_assignments",
    "DEFAULT_REPLAY_LIMIT",
    "DirectionJudgment",
    "load_direction_judgments",
    "AnnotationStore",
    "DuplicateSubmission",
]
