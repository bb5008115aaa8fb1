import { ExplorerApi } from './api';
import { hemisphereUnproject } from './project';
import { drawAirfoil, drawLatentMap, discPanel, formatMetric } from './render';
import { ExplorerSession } from './state';
import type { Overlay } from './types';

const API_BASE = (window as unknown as { FOILGEN_API?: string }).FOILGEN_API
  ?? 'http://127.0.0.1:8642';

const api = new ExplorerApi(API_BASE);
const session = new ExplorerSession(api);

const mapCanvas = document.getElementById('latent-map') as HTMLCanvasElement;
const foilCanvas = document.getElementById('airfoil') as HTMLCanvasElement;
const slider = document.getElementById('cl-slider') as HTMLInputElement;
const sliderLabel = document.getElementById('cl-value') as HTMLSpanElement;
const overlaySelect = document.getElementById('overlay') as HTMLSelectElement;
const metricsPanel = document.getElementById('metrics') as HTMLDivElement;
const noticeBox = document.getElementById('notice') as HTMLDivElement;
const historyList = document.getElementById('history') as HTMLUListElement;
const sampleBtn = document.getElementById('sample-btn') as HTMLButtonElement;
const sampleCount = document.getElementById('sample-count') as HTMLInputElement;
const sampleMode = document.getElementById('sample-mode') as HTMLSelectElement;

let mapBounds: { lo: number[]; hi: number[] } | null = null;

function computeBounds(): void {
  const map = session.state.map;
  if (!map || session.state.model?.kind !== 'gauss') return;
  const lo = [Infinity, Infinity];
  const hi = [-Infinity, -Infinity];
  for (const z of map.z) {
    for (const k of [0, 1]) {
      lo[k] = Math.min(lo[k], z[k]);
      hi[k] = Math.max(hi[k], z[k]);
    }
  }
  mapBounds = { lo, hi };
}

function redraw(): void {
  const s = session.state;
  drawLatentMap(mapCanvas, s.map, s.overlay, s.model?.kind ?? 'gauss', null,
                s.sampled, s.selectedZ, mapBounds);
  drawAirfoil(foilCanvas, s.lastResponse,
              s.history.slice(1, 6).map((h) => h.response.shape));
  const r = s.lastResponse;
  metricsPanel.innerHTML = r
    ? `<table>
        <tr><td>target c_l</td><td>${formatMetric(r.c_l)}</td></tr>
        <tr><td>recomputed C_L</td><td>${formatMetric(r.c_l_recomputed)}</td></tr>
        <tr><td>squared error</td><td>${formatMetric(r.error)}</td></tr>
        <tr><td>roundness w</td><td>${formatMetric(r.w)}</td></tr>
      </table>`
    : '<em>pick a latent point to decode</em>';
  noticeBox.textContent = s.notice ?? '';
  noticeBox.style.display = s.notice ? 'block' : 'none';
  historyList.innerHTML = s.history
    .map((h, i) => `<li data-idx="${i}">c_l=${h.c_l.toFixed(3)} -> `
      + `C_L=${formatMetric(h.response.c_l_recomputed, 4)}, `
      + `w=${formatMetric(h.response.w, 3)}</li>`)
    .join('');
}

function canvasPick(ev: MouseEvent): number[] | null {
  const rect = mapCanvas.getBoundingClientRect();
  const px = ((ev.clientX - rect.left) / rect.width) * mapCanvas.width;
  const py = ((ev.clientY - rect.top) / rect.height) * mapCanvas.height;
  const kind = session.state.model?.kind;
  if (kind === 'sphere') {
    for (const which of [0, 1] as const) {
      const geo = discPanel(mapCanvas, which, 2);
      const x = (px - geo.cx) / geo.radius;
      const y = (geo.cy - py) / geo.radius;
      if (x * x + y * y <= 1.05) return hemisphereUnproject(x, y, which === 0);
    }
    return null;
  }
  const geo = discPanel(mapCanvas, 0, 1);
  const nx = (px - geo.cx) / geo.radius;
  const ny = (geo.cy - py) / geo.radius;
  const lo = mapBounds?.lo ?? [-3, -3];
  const hi = mapBounds?.hi ?? [3, 3];
  return [lo[0] + ((nx + 1) / 2) * (hi[0] - lo[0]),
          lo[1] + ((ny + 1) / 2) * (hi[1] - lo[1])];
}

mapCanvas.addEventListener('click', (ev) => {
  const z = canvasPick(ev);
  if (z) void session.pick(z);
});

slider.addEventListener('input', () => {
  const v = parseFloat(slider.value);
  sliderLabel.textContent = v.toFixed(3);
  session.setLabel(v);
  if (session.state.selectedZ) void session.pick(session.state.selectedZ, v);
});

overlaySelect.addEventListener('change', () => {
  session.setOverlay(overlaySelect.value as Overlay);
});

sampleBtn.addEventListener('click', () => {
  void session.sampleBatch(parseInt(sampleCount.value, 10) || 0,
                           sampleMode.value, Date.now() % 100000);
});

historyList.addEventListener('click', (ev) => {
  const li = (ev.target as HTMLElement).closest('li');
  if (!li) return;
  const entry = session.state.history[parseInt(li.dataset.idx ?? '0', 10)];
  if (entry) void session.pick(entry.z, entry.c_l);
});

session.onChange(redraw);
session.init()
  .then(() => {
    computeBounds();
    redraw();
  })
  .catch((err) => {
    noticeBox.textContent = `cannot reach server at ${API_BASE}: ${err}`;
    noticeBox.style.display = 'block';
  });
