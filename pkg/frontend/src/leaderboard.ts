// Leaderboard presentation: rows come straight from GET /leaderboard in rank
// order; the only client-side touch is flagging the viewer's own entry.

import { LeaderboardEntry } from "./types";

export interface BoardRow {
  rank: number;
  name: string;
  score: string; // fixed to 2 decimals for display
  params: number;
  mine: boolean;
}

export function boardRows(entries: LeaderboardEntry[], ownId: string | null): BoardRow[] {
  return entries.map((e) => ({
    rank: e.rank,
    name: e.display_name,
    score: e.score.toFixed(2),
    params: e.parameter_count,
    mine: ownId !== null && e.id === ownId,
  }));
}
