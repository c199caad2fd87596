// Form model for the config editor.  Inputs hold raw strings; the model
// parses them into a wire document (canonical key order) and validates with
// the same rules the service applies, so every inline annotation matches
// what a rejected POST would have said.

import {
  ACTIVATIONS,
  DEFAULT_CONFIG,
  INT_KEYS,
  NUM_KEYS,
  ParsedConfig,
  validateConfig,
  ValidateResult,
} from "./config";

export type ScalarKey = (typeof INT_KEYS)[number] | (typeof NUM_KEYS)[number];

export interface LayerRow {
  neurons: string;
  activation: string;
}

// Dotted error paths come back in the service's internal naming; this maps
// them onto the form field that should light up.
const PATH_TO_FIELD: Record<string, string> = {
  "sensor.lanes_side": "lanesSide",
  "sensor.patches_ahead": "patchesAhead",
  "sensor.patches_behind": "patchesBehind",
  "sensor.temporal_window": "temporal_window",
  sensor: "lanesSide",
  "trainer.learning_rate": "learning_rate",
  "trainer.momentum": "momentum",
  "trainer.l2_decay": "l2_decay",
  "trainer.batch_size": "batch_size",
  trainer: "learning_rate",
  learning_steps_burnin: "learning_steps_burning",
  epsilon_test: "epsilon_test_time",
  "limits.max_parameter_count": "layers",
  "limits.max_training_steps": "learning_steps_total",
};

export function fieldForPath(path: string): string | null {
  if (path in PATH_TO_FIELD) return PATH_TO_FIELD[path];
  if (path.startsWith("layers")) return "layers";
  if (([...INT_KEYS, ...NUM_KEYS] as string[]).includes(path)) return path;
  return null;
}

// "3" -> 3, "2.5" -> 2.5 (validator will flag int fields), junk stays a
// string so the validator reports "must be an integer / a number".
function parseScalar(raw: string): number | string {
  const t = raw.trim();
  if (t === "") return raw;
  const n = Number(t);
  return Number.isFinite(n) ? n : raw;
}

export class EditorModel {
  private scalars = new Map<string, string>();
  layers: LayerRow[] = [];

  constructor(seed: ParsedConfig = DEFAULT_CONFIG) {
    this.load(seed);
  }

  load(cfg: ParsedConfig): void {
    this.scalars.clear();
    for (const key of INT_KEYS) this.scalars.set(key, String(cfg[key]));
    for (const key of NUM_KEYS) this.scalars.set(key, String(cfg[key]));
    this.layers = cfg.layers.map((l) => ({
      neurons: String(l.num_neurons),
      activation: l.activation,
    }));
  }

  raw(key: ScalarKey): string {
    return this.scalars.get(key) ?? "";
  }

  setField(key: ScalarKey, raw: string): void {
    this.scalars.set(key, raw);
  }

  addLayer(): void {
    this.layers.push({ neurons: "24", activation: "relu" });
  }

  removeLayer(i: number): void {
    this.layers.splice(i, 1);
  }

  setLayer(i: number, patch: Partial<LayerRow>): void {
    this.layers[i] = { ...this.layers[i], ...patch };
  }

  // The draft as a wire document in canonical key order.
  doc(): Record<string, unknown> {
    const doc: Record<string, unknown> = {};
    const put = (key: string) => {
      doc[key] = parseScalar(this.scalars.get(key) ?? "");
    };
    put("lanesSide");
    put("patchesAhead");
    put("patchesBehind");
    put("temporal_window");
    put("other_agents");
    doc.layers = this.layers.map((l) => ({
      num_neurons: parseScalar(l.neurons),
      activation: l.activation,
    }));
    put("learning_rate");
    put("momentum");
    put("batch_size");
    put("l2_decay");
    put("gamma");
    put("experience_size");
    put("epsilon_min");
    put("epsilon_test_time");
    put("learning_steps_total");
    put("start_learning_threshold");
    put("learning_steps_burning");
    return doc;
  }

  validate(): ValidateResult {
    return validateConfig(this.doc());
  }

  // field name -> message for inline annotation; empty when submittable.
  fieldErrors(): Map<string, string> {
    const errors = new Map<string, string>();
    const result = this.validate();
    if (!result.ok) {
      const field = fieldForPath(result.path);
      errors.set(field ?? "lanesSide", result.message);
    }
    return errors;
  }

  canSubmit(): boolean {
    return this.validate().ok;
  }
}

export { ACTIVATIONS };
