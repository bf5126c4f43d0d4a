/**
 * Tie-permitting rank structure shared with the server.
 *
 * A valid ranking occupies consecutive positions starting at 1: when k
 * entries share rank r they fill positions r..r+k-1, so the next distinct
 * rank must be exactly r+k. The validator must accept exactly the rankings
 * the server accepts (conformance fixture under tests/fixtures).
 */

export type RankMap = Record<string, number>;

/** Null when valid, otherwise a human-readable reason. */
export function validateTieStructure(ranks: RankMap, nCandidates?: number): string | null {
  const entries = Object.entries(ranks);
  if (entries.length === 0) return "empty ranking";
  if (nCandidates !== undefined && entries.length !== nCandidates) {
    return `ranking covers ${entries.length} of ${nCandidates} candidates`;
  }
  const counts = new Map<number, number>();
  for (const [model, rank] of entries) {
    if (!Number.isInteger(rank) || rank < 1) {
      return `rank for '${model}' must be an integer >= 1`;
    }
    counts.set(rank, (counts.get(rank) ?? 0) + 1);
  }
  let expected = 1;
  for (const rank of [...counts.keys()].sort((a, b) => a - b)) {
    if (rank !== expected) {
      return `invalid tie structure: next rank must be ${expected}, found ${rank}`;
    }
    expected = rank + (counts.get(rank) ?? 0);
  }
  return null;
}

/**
 * Next rank position a new tie group may start at, given the ranks assigned
 * so far. Three videos dropped on rank 2 occupy positions 2..4, so the next
 * assignable rank is 5.
 */
export function nextAssignableRank(assigned: number[]): number {
  if (assigned.length === 0) return 1;
  const counts = new Map<number, number>();
  for (const r of assigned) counts.set(r, (counts.get(r) ?? 0) + 1);
  let next = 1;
  for (const [rank, count] of counts) {
    next = Math.max(next, rank + count);
  }
  return next;
}
