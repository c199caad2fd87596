// Page wiring: a config form labeled with the exact hyperparameter names,
// the two live canvases, and the leaderboard.  Everything the page does goes
// through ArenaClient; there is no other path to the service.

import { ApiError, ArenaClient } from "./api";
import { canonicalDoc, CANONICAL_KEYS, inputSize, parameterCount } from "./config";
import { drawGrid, drawHighway } from "./draw";
import { ACTIVATIONS, EditorModel } from "./editor";
import { FpsMeter, FrameBuffer, renderTick } from "./frames";
import { boardRows } from "./leaderboard";
import { pollToCompletion, watchSession } from "./session";
import { FrameEvent } from "./types";

const API_BASE =
  new URLSearchParams(location.search).get("api") ?? location.origin;
const client = new ArenaClient(API_BASE);

const model = new EditorModel();
let ownId: string | null = null;
let busy = false;

const $ = (id: string) => document.getElementById(id)!;
const form = $("config-form") as HTMLFormElement;
const banner = $("banner");

// ---------------------------------------------------------------- form

function scalarInput(key: string): HTMLInputElement {
  return form.querySelector(`input[name="${key}"]`) as HTMLInputElement;
}

function buildForm(): void {
  const host = $("scalar-fields");
  for (const key of CANONICAL_KEYS) {
    if (key === "layers") continue;
    const label = document.createElement("label");
    label.textContent = key; // field names shown exactly as the wire format
    const input = document.createElement("input");
    input.type = "text";
    input.name = key;
    input.value = model.raw(key as never);
    input.addEventListener("input", () => {
      model.setField(key as never, input.value);
      if (key === "gamma") syncGammaSlider();
      refresh();
    });
    const err = document.createElement("span");
    err.className = "err";
    err.id = `err-${key}`;
    label.append(err, input);
    host.append(label);
  }

  const slider = $("gamma-slider") as HTMLInputElement;
  slider.addEventListener("input", () => {
    model.setField("gamma", slider.value);
    scalarInput("gamma").value = slider.value;
    refresh();
  });
  syncGammaSlider();

  $("add-layer").addEventListener("click", () => {
    model.addLayer();
    renderLayers();
    refresh();
  });
  renderLayers();
}

function syncGammaSlider(): void {
  const slider = $("gamma-slider") as HTMLInputElement;
  const v = Number(model.raw("gamma"));
  if (Number.isFinite(v)) slider.value = String(Math.min(0.99, Math.max(0, v)));
  $("gamma-value").textContent = model.raw("gamma");
}

function renderLayers(): void {
  const host = $("layer-rows");
  host.innerHTML = "";
  model.layers.forEach((row, i) => {
    const div = document.createElement("div");
    div.className = "layer-row";
    const neurons = document.createElement("input");
    neurons.value = row.neurons;
    neurons.addEventListener("input", () => {
      model.setLayer(i, { neurons: neurons.value });
      refresh();
    });
    const act = document.createElement("select");
    for (const name of ACTIVATIONS) {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      act.append(opt);
    }
    act.value = row.activation;
    act.addEventListener("change", () => {
      model.setLayer(i, { activation: act.value });
      refresh();
    });
    const del = document.createElement("button");
    del.type = "button";
    del.textContent = "x";
    del.addEventListener("click", () => {
      model.removeLayer(i);
      renderLayers();
      refresh();
    });
    div.append(neurons, act, del);
    host.append(div);
  });
}

function refresh(): void {
  const errors = model.fieldErrors();
  for (const key of CANONICAL_KEYS) {
    const err = document.getElementById(`err-${key}`);
    if (!err) continue;
    const message = errors.get(key) ?? "";
    err.textContent = message;
    if (key !== "layers") {
      scalarInput(key).classList.toggle("bad", message !== "");
    }
  }
  const result = model.validate();
  const facts = $("net-facts");
  facts.textContent = result.ok
    ? `inputs ${inputSize(result.config)} · parameters ${parameterCount(result.config)}`
    : "";
  ($("submit-btn") as HTMLButtonElement).disabled = !result.ok || busy;
}

// ---------------------------------------------------------------- live view

const buffer = new FrameBuffer();
const meter = new FpsMeter();
let highwayCtx: CanvasRenderingContext2D;
let gridCtx: CanvasRenderingContext2D;

function drawFrame(frame: FrameEvent): void {
  drawHighway(highwayCtx, frame);
  if (frame.grid) drawGrid(gridCtx, frame.grid);
  if (frame.outcome) {
    const rolling = frame.training ? frame.training.smoothed_reward * 80 : null;
    $("ego-speed").textContent =
      `ego ${frame.outcome.ego_speed_mph.toFixed(1)} mph` +
      (rolling !== null ? ` · avg ${rolling.toFixed(1)}` : "");
  }
  if (frame.training) {
    const loss = frame.training.loss;
    $("train-stats").textContent =
      `step ${frame.training.step} · eps ${frame.training.epsilon.toFixed(3)}` +
      (loss !== null ? ` · loss ${loss.toFixed(4)}` : "");
  }
}

function startRenderLoop(): void {
  const tick = () => {
    renderTick(buffer, drawFrame, meter);
    requestAnimationFrame(tick);
  };
  requestAnimationFrame(tick);
  setInterval(() => {
    $("fps").textContent = `render ${meter.fps().toFixed(0)} fps`;
  }, 500);
}

// ---------------------------------------------------------------- submit

async function submitDraft(): Promise<void> {
  const result = model.validate();
  if (!result.ok || busy) return;
  busy = true;
  refresh();
  const status = $("submit-status");
  banner.classList.add("hidden");
  try {
    const sent = canonicalDoc(result.config);
    const sentBytes = JSON.stringify(sent);
    const name = ($("display-name") as HTMLInputElement).value || "anonymous";
    const reply = await client.submit({ display_name: name, config: sent });
    ownId = reply.id;
    status.textContent = `submission ${reply.id}: ${reply.status}`;

    const watcher = watchSession(client, reply.id, buffer, {
      onState: (s) => ($("stream-state").textContent = `stream ${s}`),
    });
    const final = await pollToCompletion(client, reply.id, {
      onUpdate: (view) => {
        status.textContent = `submission ${view.id}: ${view.status}`;
      },
    });
    await watcher;

    if (final.status === "scored") {
      const echoed = JSON.stringify(final.config);
      const roundTrip = echoed === sentBytes ? "config round-trip ok" : "CONFIG MISMATCH";
      status.textContent =
        `submission ${final.id}: scored ${final.score?.toFixed(2)} mph · ${roundTrip}`;
    } else {
      status.textContent = `submission ${final.id}: failed — ${final.error ?? "unknown"}`;
    }
    await refreshBoard();
  } catch (e) {
    const msg = e instanceof ApiError ? `${e.path || "request"}: ${e.message}` : String(e);
    banner.textContent = msg;
    banner.classList.remove("hidden");
  } finally {
    busy = false;
    refresh();
  }
}

// ---------------------------------------------------------------- board

async function refreshBoard(): Promise<void> {
  try {
    const rows = boardRows(await client.leaderboard(50), ownId);
    const body = $("board-body");
    body.innerHTML = "";
    for (const row of rows) {
      const tr = document.createElement("tr");
      if (row.mine) tr.className = "mine";
      tr.innerHTML =
        `<td>${row.rank}</td><td></td><td>${row.score}</td><td>${row.params}</td>`;
      (tr.children[1] as HTMLElement).textContent = row.name; // no HTML injection
      body.append(tr);
    }
  } catch {
    // transient; next poll will repaint
  }
}

// ---------------------------------------------------------------- boot

window.addEventListener("load", () => {
  highwayCtx = ($("highway") as HTMLCanvasElement).getContext("2d")!;
  gridCtx = ($("grid") as HTMLCanvasElement).getContext("2d")!;
  buildForm();
  refresh();
  startRenderLoop();
  refreshBoard();
  setInterval(refreshBoard, 3000);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    submitDraft();
  });
});
