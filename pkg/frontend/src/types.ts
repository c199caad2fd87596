// Wire types for the arena HTTP API.  These mirror what the service actually
// emits; nothing here is invented client-side.

export type SubmissionStatus =
  | "queued"
  | "training"
  | "evaluating"
  | "scored"
  | "failed";

export interface SubmissionView {
  id: string;
  display_name: string;
  status: SubmissionStatus;
  score: number | null;
  error: string | null;
  config: Record<string, unknown>;
  has_checkpoint: boolean;
  parameter_count: number;
  submitted_at: string;
  scored_at: string | null;
}

export interface LeaderboardEntry {
  rank: number;
  id: string;
  display_name: string;
  score: number;
  parameter_count: number;
  submitted_at: string;
}

export interface Meta {
  service: string;
  official_protocol: { runs: number; steps_per_run: number; base_seed: number };
  limits: { max_parameter_count: number; max_training_steps: number };
  world: {
    lane_count: number;
    highway_length: number;
    lane_width: number;
    [key: string]: unknown;
  };
  vehicle_count: number;
  frame_rate: number;
  config_schema: Record<string, unknown>;
  default_config: Record<string, unknown>;
}

export type VehicleKind = "ego" | "clone" | "ambient";

export interface FrameVehicle {
  id: number;
  kind: VehicleKind;
  x: number; // left edge, px
  y: number; // nose, px; smaller y is further ahead
  speed: number;
  target_lane: number;
}

export interface TrainingStatus {
  step: number;
  epsilon: number;
  smoothed_reward: number;
  loss: number | null;
}

export interface FrameEvent {
  t: number;
  vehicles: FrameVehicle[];
  outcome?: {
    t: number;
    ego_speed_mph: number;
    red_speeds_mph: number[];
    respawned_ids: number[];
  };
  grid?: number[][]; // 7 lanes x 70 rows, occupant mph or 0
  training?: TrainingStatus;
}
