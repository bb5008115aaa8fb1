import { hemisphereProject } from './project';
import type { DecodeResponse, LatentMap, Overlay } from './types';

const FAMILY_COLORS: Record<string, string> = {
  naca: '#d62728',
  joukowski: '#1f77b4',
  generated: '#2ca02c',
};

function clColor(v: number): string {
  // blue (0) -> red (1.6)
  const t = Math.min(Math.max(v / 1.6, 0), 1);
  const r = Math.round(40 + 215 * t);
  const b = Math.round(255 - 215 * t);
  return `rgb(${r},60,${b})`;
}

function wColor(v: number | null): string {
  if (v === null || !isFinite(v)) return '#999999';
  // log scale over [1e-8, 1]
  const t = Math.min(Math.max((Math.log10(Math.max(v, 1e-8)) + 8) / 8, 0), 1);
  const g = Math.round(200 * (1 - t) + 30 * t);
  return `rgb(${Math.round(30 + 200 * t)},${g},120)`;
}

export function overlayColor(overlay: Overlay, cL: number, family: string,
                             w: number | null): string {
  if (overlay === 'family') return FAMILY_COLORS[family] ?? '#555555';
  if (overlay === 'w') return wColor(w);
  return clColor(cL);
}

export interface PanelGeometry {
  cx: number;
  cy: number;
  radius: number;
}

export function discPanel(canvas: HTMLCanvasElement, which: 0 | 1, total: number): PanelGeometry {
  const w = canvas.width / total;
  return { cx: w * which + w / 2, cy: canvas.height / 2, radius: Math.min(w, canvas.height) / 2 - 14 };
}

/** Scatter the latent map: one disc for planar models, two hemisphere discs
 * (z3 >= 0 | z3 < 0) for spherical ones. */
export function drawLatentMap(canvas: HTMLCanvasElement, map: LatentMap | null,
                              overlay: Overlay, kind: string,
                              wValues: (number | null)[] | null,
                              sampled: number[][], selected: number[] | null,
                              bounds: { lo: number[]; hi: number[] } | null): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.font = '12px sans-serif';
  if (!map || map.ids.length === 0) {
    ctx.fillStyle = '#666666';
    ctx.fillText('no latent map: start the server with --dataset', 16, 24);
    return;
  }
  const panels = kind === 'sphere' ? 2 : 1;
  for (let p = 0; p < panels; p += 1) {
    const geo = discPanel(canvas, p as 0 | 1, panels);
    ctx.strokeStyle = '#bbbbbb';
    ctx.beginPath();
    ctx.arc(geo.cx, geo.cy, geo.radius, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.fillStyle = '#444444';
    if (kind === 'sphere') ctx.fillText(p === 0 ? 'z3 >= 0' : 'z3 < 0', geo.cx - 24, 16);
  }
  const toCanvas = (z: number[]): { x: number; y: number } | null => {
    if (kind === 'sphere') {
      const h = hemisphereProject(z);
      const geo = discPanel(canvas, h.upper ? 0 : 1, 2);
      return { x: geo.cx + h.x * geo.radius, y: geo.cy - h.y * geo.radius };
    }
    const geo = discPanel(canvas, 0, 1);
    const lo = bounds?.lo ?? [-3, -3];
    const hi = bounds?.hi ?? [3, 3];
    const nx = ((z[0] - lo[0]) / (hi[0] - lo[0])) * 2 - 1;
    const ny = ((z[1] - lo[1]) / (hi[1] - lo[1])) * 2 - 1;
    return { x: geo.cx + nx * geo.radius, y: geo.cy - ny * geo.radius };
  };
  map.z.forEach((z, i) => {
    const pt = toCanvas(z);
    if (!pt) return;
    ctx.fillStyle = overlayColor(overlay, map.c_l[i], map.family[i],
                                 wValues ? wValues[i] : null);
    ctx.fillRect(pt.x - 1.5, pt.y - 1.5, 3, 3);
  });
  ctx.strokeStyle = '#111111';
  sampled.forEach((z) => {
    const pt = toCanvas(z);
    if (!pt) return;
    ctx.beginPath();
    ctx.arc(pt.x, pt.y, 4, 0, 2 * Math.PI);
    ctx.stroke();
  });
  if (selected) {
    const pt = toCanvas(selected);
    if (pt) {
      ctx.strokeStyle = '#000000';
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(pt.x, pt.y, 6, 0, 2 * Math.PI);
      ctx.stroke();
      ctx.lineWidth = 1;
    }
  }
}

/** Airfoil view: equal-aspect axes on the unit-chord frame. */
export function drawAirfoil(canvas: HTMLCanvasElement, resp: DecodeResponse | null,
                            faded: number[][][] = []): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const margin = 20;
  const scale = canvas.width - 2 * margin;
  const x0 = margin;
  const y0 = canvas.height / 2;
  const toXY = (p: number[]): [number, number] => [x0 + p[0] * scale, y0 - p[1] * scale];
  ctx.strokeStyle = '#dddddd';
  ctx.beginPath();
  ctx.moveTo(...toXY([0, 0]));
  ctx.lineTo(...toXY([1, 0]));
  ctx.stroke();
  const drawLoop = (pts: number[][], style: string, width: number) => {
    ctx.strokeStyle = style;
    ctx.lineWidth = width;
    ctx.beginPath();
    pts.forEach((p, i) => {
      const [x, y] = toXY(p);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
    ctx.lineWidth = 1;
  };
  faded.forEach((pts) => drawLoop(pts, '#cccccc', 1));
  if (resp) drawLoop(resp.shape, '#1f77b4', 2);
}

export function formatMetric(value: number | null, digits = 5): string {
  if (value === null || !isFinite(value)) return 'n/a';
  return value.toPrecision(digits);
}
