// Canvas painters for the two panes: the highway itself and the occupancy
// grid the network actually sees.  Both draw in simulation coordinates
// (140 x 700 px); CSS scales the canvases.  The Paint2D interface is the
// subset of CanvasRenderingContext2D we touch, so tests can pass a recorder.

import { FrameEvent, VehicleKind } from "./types";

export const LANES = 7;
export const LANE_W = 20;
export const ROAD_LEN = 700;
export const BODY_W = 20;
export const BODY_L = 40;
export const CELL_H = 10;
export const ROWS = 70;
export const TOP_SPEED = 80;

export interface Paint2D {
  // `unknown` keeps the interface satisfiable by CanvasRenderingContext2D
  // (whose style properties are unions) and by plain string recorders alike.
  fillStyle: unknown;
  strokeStyle: unknown;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  setLineDash(segments: number[]): void;
}

export function vehicleColor(kind: VehicleKind): string {
  if (kind === "ego") return "#e53935";
  if (kind === "clone") return "#fb8c00";
  return "#eceff1";
}

// Heat-map intensity is the cell's speed as a fraction of the 80 mph cap.
export function cellIntensity(mph: number): number {
  return Math.max(0, Math.min(1, mph / TOP_SPEED));
}

export function drawHighway(g: Paint2D, frame: FrameEvent): void {
  g.fillStyle = "#263238";
  g.fillRect(0, 0, LANES * LANE_W, ROAD_LEN);

  g.strokeStyle = "#546e7a";
  g.lineWidth = 1;
  g.setLineDash([6, 8]);
  for (let lane = 1; lane < LANES; lane++) {
    g.beginPath();
    g.moveTo(lane * LANE_W, 0);
    g.lineTo(lane * LANE_W, ROAD_LEN);
    g.stroke();
  }
  g.setLineDash([]);

  for (const v of frame.vehicles) {
    g.fillStyle = vehicleColor(v.kind);
    g.fillRect(v.x, v.y, BODY_W, BODY_L);
  }
}

export function drawGrid(g: Paint2D, grid: number[][]): void {
  g.fillStyle = "#111418";
  g.fillRect(0, 0, LANES * LANE_W, ROWS * CELL_H);
  for (let lane = 0; lane < grid.length; lane++) {
    const col = grid[lane];
    for (let row = 0; row < col.length; row++) {
      const mph = col[row];
      if (mph <= 0) continue;
      g.fillStyle = `rgba(229, 57, 53, ${cellIntensity(mph)})`;
      g.fillRect(lane * LANE_W + 1, row * CELL_H + 1, LANE_W - 2, CELL_H - 2);
    }
  }
}
