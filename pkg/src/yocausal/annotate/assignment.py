"""Balanced assignment of preference prompt groups to annotators."""

from dataclasses import dataclass

import numpy as np

from ..seeding import derive_seed


class AssignmentError(ValueError):
    pass


@dataclass
class AssignmentPlan:
    assignments: dict[str, list[str]]  # annotator_id -> prompt group ids
    rankings_per_group: int  # R
    groups_per_annotator: int  # G

    def annotators_for(self, group_id: str) -> list[str]:
        return [a for a, groups in self.assignments.items() if group_id in groups]

    def to_dict(self) -> dict:
        return {
            "assignments": self.assignments,
            "rankings_per_group": self.rankings_per_group,
            "groups_per_annotator": self.groups_per_annotator,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "AssignmentPlan":
        return cls(
            assignments={str(k): list(v) for k, v in obj["assignments"].items()},
            rankings_per_group=int(obj["rankings_per_group"]),
            groups_per_annotator=int(obj["groups_per_annotator"]),
        )


def plan_assignments(
    annotators: list[str],
    prompt_groups: list[str],
    rankings_per_group: int = 3,
    groups_per_annotator: int = 6,
    seed: int = 0,
) -> AssignmentPlan:
    """Deal each group to exactly R distinct annotators, G groups per annotator.

    Feasible only when |annotators| * G == |groups| * R and R <= |annotators|;
    the construction deals the R copies of each group to consecutive
    annotators round-robin, which meets both counting constraints exactly.
    """
    n_a, n_g = len(annotators), len(prompt_groups)
    r, g = rankings_per_group, groups_per_annotator
    if n_a == 0 or n_g == 0 or r < 1 or g < 1:
        raise AssignmentError("need at least one annotator, one group, and positive R and G")
    if len(set(annotators)) != n_a or len(set(prompt_groups)) != n_g:
        raise AssignmentError("annotator and group ids must be unique")
    if n_a * g != n_g * r:
        raise AssignmentError(
            f"infeasible: {n_a} annotators x G={g} gives {n_a * g} slots but "
            f"{n_g} groups x R={r} needs {n_g * r}"
        )
    if r > n_a:
        raise AssignmentError(f"infeasible: a group cannot get {r} distinct annotators from {n_a}")

    rng = np.random.default_rng(derive_seed("assignment", seed))
    annotator_order = [annotators[i] for i in rng.permutation(n_a)]
    group_order = [prompt_groups[i] for i in rng.permutation(n_g)]

    assignments: dict[str, list[str]] = {a: [] for a in annotator_order}
    task_index = 0
    for group in group_order:
        for _ in range(r):
            assignments[annotator_order[task_index % n_a]].append(group)
            task_index += 1
    return AssignmentPlan(
        assignments={a: assignments[a] for a in sorted(assignments)},
        rankings_per_group=r,
        groups_per_annotator=g,
    )
