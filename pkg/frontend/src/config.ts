// AgentConfig validation, mirrored field-for-field from the service so the
// form can annotate problems before any network call.  Error paths and
// messages match the API's `{error: {path, message}}` envelope exactly; the
// fixture suite (tests/fixtures/config-cases.json, generated from the service
// validator) keeps the two in lock-step.
//
// One gap is unbridgeable: JSON.parse collapses `3.0` to `3`, so a
// float-typed integer in raw JSON can only be caught server-side.  The editor
// never produces that shape, and fractional values (2.5) are still rejected
// here.

export const ACTIVATIONS = ["linear", "relu", "sigmoid", "tanh"] as const;

const LANES = 7;
const ROWS = 70;
const ACTION_COUNT = 5;
const MAX_CLONES = 10;

// Canonical key order of the wire format; serialization and the editor both
// follow it so a submitted config comes back byte-identical.
export const INT_KEYS = [
  "lanesSide",
  "patchesAhead",
  "patchesBehind",
  "temporal_window",
  "other_agents",
  "batch_size",
  "experience_size",
  "learning_steps_total",
  "start_learning_threshold",
  "learning_steps_burning",
] as const;

export const NUM_KEYS = [
  "learning_rate",
  "momentum",
  "l2_decay",
  "gamma",
  "epsilon_min",
  "epsilon_test_time",
] as const;

export const CANONICAL_KEYS = [
  "lanesSide",
  "patchesAhead",
  "patchesBehind",
  "temporal_window",
  "other_agents",
  "layers",
  "learning_rate",
  "momentum",
  "batch_size",
  "l2_decay",
  "gamma",
  "experience_size",
  "epsilon_min",
  "epsilon_test_time",
  "learning_steps_total",
  "start_learning_threshold",
  "learning_steps_burning",
] as const;

const KNOWN_KEYS = new Set<string>([
  ...CANONICAL_KEYS,
  "learning_steps_burnin",
  "epsilon_test",
]);

export interface LayerDef {
  num_neurons: number;
  activation: string;
}

export interface ParsedConfig {
  lanesSide: number;
  patchesAhead: number;
  patchesBehind: number;
  temporal_window: number;
  other_agents: number;
  layers: LayerDef[];
  learning_rate: number;
  momentum: number;
  batch_size: number;
  l2_decay: number;
  gamma: number;
  experience_size: number;
  epsilon_min: number;
  epsilon_test_time: number;
  learning_steps_total: number;
  start_learning_threshold: number;
  learning_steps_burning: number;
}

export const DEFAULT_CONFIG: ParsedConfig = {
  lanesSide: 3,
  patchesAhead: 24,
  patchesBehind: 6,
  temporal_window: 0,
  other_agents: 0,
  layers: [
    { num_neurons: 48, activation: "relu" },
    { num_neurons: 24, activation: "relu" },
  ],
  learning_rate: 0.001,
  momentum: 0,
  batch_size: 64,
  l2_decay: 0,
  gamma: 0.9,
  experience_size: 10000,
  epsilon_min: 0.05,
  epsilon_test_time: 0,
  learning_steps_total: 25000,
  start_learning_threshold: 500,
  learning_steps_burning: 1000,
};

export class ConfigIssue {
  constructor(
    public readonly path: string,
    public readonly message: string,
  ) {}
}

export type ValidateResult =
  | { ok: true; config: ParsedConfig }
  | { ok: false; path: string; message: string };

function isInt(v: unknown): v is number {
  return typeof v === "number" && Number.isInteger(v);
}

function getInt(doc: Record<string, unknown>, key: string, fallback: number): number {
  if (!(key in doc)) return fallback;
  const v = doc[key];
  if (!isInt(v)) throw new ConfigIssue(key, "must be an integer");
  return v;
}

function getNum(doc: Record<string, unknown>, key: string, fallback: number): number {
  if (!(key in doc)) return fallback;
  const v = doc[key];
  if (typeof v !== "number") throw new ConfigIssue(key, "must be a number");
  return v;
}

function sliceSize(cfg: ParsedConfig): number {
  return (2 * cfg.lanesSide + 1) * (cfg.patchesAhead + cfg.patchesBehind);
}

export function inputSize(cfg: ParsedConfig): number {
  const w = cfg.temporal_window;
  return sliceSize(cfg) * (w + 1) + ACTION_COUNT * w;
}

// Weight + bias count of the full net (input and output layers included),
// the same number the service checks against max_parameter_count.
export function parameterCount(cfg: ParsedConfig): number {
  const dims = [inputSize(cfg), ...cfg.layers.map((l) => l.num_neurons), ACTION_COUNT];
  let total = 0;
  for (let i = 1; i < dims.length; i++) total += (dims[i - 1] + 1) * dims[i];
  return total;
}

function validateSemantics(cfg: ParsedConfig): void {
  // Sensor window.
  if (cfg.lanesSide < 0 || 2 * cfg.lanesSide + 1 > LANES) {
    throw new ConfigIssue("sensor.lanes_side", "lanes_side must keep the window within 7 lanes");
  }
  if (cfg.patchesAhead < 1) {
    throw new ConfigIssue("sensor.patches_ahead", "patches_ahead must be >= 1");
  }
  if (cfg.patchesBehind < 0) {
    throw new ConfigIssue("sensor.patches_behind", "patches_behind must be >= 0");
  }
  if (cfg.patchesAhead + cfg.patchesBehind > ROWS) {
    throw new ConfigIssue("sensor.patches_ahead", "window taller than the 70-row grid");
  }
  if (cfg.temporal_window < 0) {
    throw new ConfigIssue("sensor.temporal_window", "temporal_window must be >= 0");
  }
  // Hidden layers (widths were checked at parse time; activations were not).
  for (const layer of cfg.layers) {
    if (!(ACTIVATIONS as readonly string[]).includes(layer.activation)) {
      throw new ConfigIssue("layers", `unknown activation '${layer.activation}'`);
    }
  }
  // Trainer.
  if (!(cfg.learning_rate > 0)) {
    throw new ConfigIssue("trainer.learning_rate", "learning_rate must be > 0");
  }
  if (!(cfg.momentum >= 0 && cfg.momentum < 1)) {
    throw new ConfigIssue("trainer.momentum", "momentum must be in [0, 1)");
  }
  if (cfg.l2_decay < 0) {
    throw new ConfigIssue("trainer.l2_decay", "l2_decay must be >= 0");
  }
  if (cfg.batch_size < 1) {
    throw new ConfigIssue("trainer.batch_size", "batch_size must be >= 1");
  }
  // Learner.
  if (!(cfg.gamma >= 0 && cfg.gamma < 1)) {
    throw new ConfigIssue("gamma", "must be in [0, 1)");
  }
  if (cfg.experience_size < 1) {
    throw new ConfigIssue("experience_size", "must be >= 1");
  }
  if (!(cfg.epsilon_min >= 0 && cfg.epsilon_min <= 1)) {
    throw new ConfigIssue("epsilon_min", "must be in [0, 1]");
  }
  if (!(cfg.epsilon_test_time >= 0 && cfg.epsilon_test_time <= 1)) {
    throw new ConfigIssue("epsilon_test_time", "must be in [0, 1]");
  }
  if (cfg.learning_steps_total < 0) {
    throw new ConfigIssue("learning_steps_total", "must be >= 0");
  }
  if (cfg.learning_steps_burning > cfg.learning_steps_total) {
    throw new ConfigIssue("learning_steps_burning", "burnin must not exceed learning_steps_total");
  }
  if (cfg.start_learning_threshold > cfg.experience_size) {
    throw new ConfigIssue("start_learning_threshold", "must not exceed experience_size");
  }
  if (cfg.other_agents < 0) {
    throw new ConfigIssue("other_agents", "must be >= 0");
  }
  if (cfg.other_agents > MAX_CLONES) {
    throw new ConfigIssue("other_agents", "at most 10 clone agents fit the road");
  }
}

function parse(doc: unknown): ParsedConfig {
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new ConfigIssue("", "config must be a JSON object");
  }
  const d = doc as Record<string, unknown>;
  for (const key of Object.keys(d)) {
    if (!KNOWN_KEYS.has(key)) throw new ConfigIssue(key, "unknown field");
  }
  const base = DEFAULT_CONFIG;
  const lanesSide = getInt(d, "lanesSide", base.lanesSide);
  const patchesAhead = getInt(d, "patchesAhead", base.patchesAhead);
  const patchesBehind = getInt(d, "patchesBehind", base.patchesBehind);
  const temporal_window = getInt(d, "temporal_window", base.temporal_window);

  let layers = base.layers;
  if ("layers" in d) {
    const raw = d.layers;
    if (!Array.isArray(raw)) throw new ConfigIssue("layers", "must be an array");
    layers = raw.map((entry, i) => {
      if (typeof entry !== "object" || entry === null || Array.isArray(entry)
          || !("num_neurons" in entry)) {
        throw new ConfigIssue(`layers[${i}]`, "expected {num_neurons, activation}");
      }
      const e = entry as Record<string, unknown>;
      const n = e.num_neurons;
      if (!isInt(n) || n < 1) {
        throw new ConfigIssue(`layers[${i}].num_neurons`, "must be a positive integer");
      }
      const act = "activation" in e ? String(e.activation) : "relu";
      return { num_neurons: n, activation: act };
    });
  }

  const learning_rate = getNum(d, "learning_rate", base.learning_rate);
  const momentum = getNum(d, "momentum", base.momentum);
  const l2_decay = getNum(d, "l2_decay", base.l2_decay);
  const batch_size = getInt(d, "batch_size", base.batch_size);

  if ("learning_steps_burning" in d && "learning_steps_burnin" in d) {
    throw new ConfigIssue("learning_steps_burnin", "give burnin under one spelling, not both");
  }
  const burninAlias = getInt(d, "learning_steps_burnin", base.learning_steps_burning);
  const learning_steps_burning = getInt(d, "learning_steps_burning", burninAlias);

  if ("epsilon_test_time" in d && "epsilon_test" in d) {
    throw new ConfigIssue("epsilon_test", "give test epsilon under one name, not both");
  }
  const epsAlias = getNum(d, "epsilon_test", base.epsilon_test_time);
  const epsilon_test_time = getNum(d, "epsilon_test_time", epsAlias);

  const cfg: ParsedConfig = {
    lanesSide,
    patchesAhead,
    patchesBehind,
    temporal_window,
    other_agents: 0, // filled below; keep the error order of the service
    layers,
    learning_rate,
    momentum,
    batch_size,
    l2_decay,
    gamma: getNum(d, "gamma", base.gamma),
    experience_size: getInt(d, "experience_size", base.experience_size),
    epsilon_min: getNum(d, "epsilon_min", base.epsilon_min),
    epsilon_test_time,
    learning_steps_total: getInt(d, "learning_steps_total", base.learning_steps_total),
    start_learning_threshold: getInt(d, "start_learning_threshold", base.start_learning_threshold),
    learning_steps_burning,
  };
  cfg.other_agents = getInt(d, "other_agents", base.other_agents);
  validateSemantics(cfg);
  return cfg;
}

export function validateConfig(doc: unknown): ValidateResult {
  try {
    return { ok: true, config: parse(doc) };
  } catch (e) {
    if (e instanceof ConfigIssue) return { ok: false, path: e.path, message: e.message };
    throw e;
  }
}

// Canonical wire document: every field present, keys in CANONICAL_KEYS order.
// JSON.stringify of this object is the byte representation the round-trip
// check compares against GET /submissions/{id}.
export function canonicalDoc(cfg: ParsedConfig): Record<string, unknown> {
  return {
    lanesSide: cfg.lanesSide,
    patchesAhead: cfg.patchesAhead,
    patchesBehind: cfg.patchesBehind,
    temporal_window: cfg.temporal_window,
    other_agents: cfg.other_agents,
    layers: cfg.layers.map((l) => ({ num_neurons: l.num_neurons, activation: l.activation })),
    learning_rate: cfg.learning_rate,
    momentum: cfg.momentum,
    batch_size: cfg.batch_size,
    l2_decay: cfg.l2_decay,
    gamma: cfg.gamma,
    experience_size: cfg.experience_size,
    epsilon_min: cfg.epsilon_min,
    epsilon_test_time: cfg.epsilon_test_time,
    learning_steps_total: cfg.learning_steps_total,
    start_learning_threshold: cfg.start_learning_threshold,
    learning_steps_burning: cfg.learning_steps_burning,
  };
}
