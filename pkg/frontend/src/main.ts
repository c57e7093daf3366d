// Single-page console wiring the tuning panels to the HTTP service.

import { ApiClient, GmmResponse, PreviewResponse } from './api.js';
import { drawHistogram, xToLevel } from './histogram.js';
import { base64ToBytes, decodePnm, toRgba } from './pnm.js';
import { PreviewScheduler, TuningSession } from './session.js';
import { TuningParams } from './params.js';

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const state: {
  api: ApiClient | null;
  session: TuningSession | null;
  bins: number[] | null;
  marker: number | null;
} = { api: null, session: null, bins: null, marker: null };

function showError(message: string): void {
  const box = $('errors');
  box.textContent = message;
  box.classList.toggle('hidden', message === '');
}

function renderPane(canvasId: string, b64: string): void {
  const img = decodePnm(base64ToBytes(b64));
  const canvas = $<HTMLCanvasElement>(canvasId);
  canvas.width = img.width;
  canvas.height = img.height;
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  const imageData = ctx.createImageData(img.width, img.height);
  imageData.data.set(toRgba(img));
  ctx.putImageData(imageData, 0, 0);
}

function applyPreview(resp: PreviewResponse): void {
  renderPane('pane-text', resp.binarized_text);
  renderPane('pane-foreground', resp.foreground);
  renderPane('pane-background', resp.background);
  renderPane('pane-restored', resp.restored);
  $('preview-meta').textContent = `preview #${resp.seq}`;
  showError('');
}

function renderSwatches(gmm: GmmResponse): void {
  const roleNames = new Map<number, string>();
  roleNames.set(gmm.roles.background, 'background');
  roleNames.set(gmm.roles.text, 'text');
  if (gmm.roles.scanner_white !== null) roleNames.set(gmm.roles.scanner_white, 'scanner white');
  for (const idx of gmm.roles.noise) roleNames.set(idx, 'noise / back-impression');

  const host = $('swatches');
  host.textContent = '';
  gmm.means.forEach((mean, i) => {
    const cell = document.createElement('div');
    cell.className = 'swatch';
    const chip = document.createElement('div');
    chip.className = 'chip';
    const [r, g, b] = mean.map((v) => Math.round(v * 255));
    chip.style.backgroundColor = `rgb(${r}, ${g}, ${b})`;
    const label = document.createElement('span');
    label.textContent = `${roleNames.get(i) ?? '?'} (P=${gmm.priors[i].toFixed(3)})`;
    cell.append(chip, label);
    host.appendChild(cell);
  });
}

function refreshHistogram(): void {
  const { api, session } = state;
  if (!api || !session) return;
  const p = session.params;
  api
    .histogram(session.sessionId, {
      bright: p.bright_medium,
      contrastKind: p.contrast_kind,
      contrastParam: p.contrast_param,
    })
    .then((h) => {
      state.bins = h.bins;
      drawHistogram($<HTMLCanvasElement>('histogram'), h.bins, state.marker);
    })
    .catch((err) => showError(String(err)));
}

function update(change: Partial<TuningParams>): void {
  if (!state.session) return;
  const errors = state.session.update(change);
  showError(errors.join('; '));
}

function bindControls(): void {
  const gamma = $<HTMLInputElement>('gamma');
  gamma.addEventListener('input', () => {
    $('gamma-value').textContent = gamma.value;
    update({ gamma: Number(gamma.value) });
  });

  $<HTMLSelectElement>('gray-mode').addEventListener('change', (e) => {
    const bright = (e.target as HTMLSelectElement).value === 'bright';
    update({ bright_medium: bright });
    refreshHistogram();
  });

  $<HTMLSelectElement>('threshold-mode').addEventListener('change', (e) => {
    const mode = (e.target as HTMLSelectElement).value;
    if (mode !== 'marker') {
      state.marker = null;
      update({ threshold: mode });
      if (state.bins) drawHistogram($<HTMLCanvasElement>('histogram'), state.bins, null);
    }
  });

  for (const [id, key] of [
    ['close-size', 'close_size'],
    ['open-size', 'open_size'],
    ['min-area', 'min_area'],
    ['k-select', 'k'],
    ['valley-window', 'valley_window'],
    ['adaptive-window', 'adaptive_window'],
  ] as const) {
    $<HTMLInputElement>(id).addEventListener('change', (e) => {
      update({ [key]: Number((e.target as HTMLInputElement).value) } as Partial<TuningParams>);
    });
  }

  $<HTMLInputElement>('blur-sigma').addEventListener('change', (e) => {
    update({ bg_blur_sigma: Number((e.target as HTMLInputElement).value) });
  });

  const histogram = $<HTMLCanvasElement>('histogram');
  let dragging = false;
  const moveMarker = (clientX: number) => {
    const rect = histogram.getBoundingClientRect();
    const x = ((clientX - rect.left) / rect.width) * histogram.width;
    state.marker = xToLevel(x, { width: histogram.width });
    $<HTMLSelectElement>('threshold-mode').value = 'marker';
    if (state.bins) drawHistogram(histogram, state.bins, state.marker);
    update({ threshold: String(state.marker / 255) });
  };
  histogram.addEventListener('mousedown', (e) => {
    dragging = true;
    moveMarker(e.clientX);
  });
  histogram.addEventListener('mousemove', (e) => {
    if (dragging) moveMarker(e.clientX);
  });
  window.addEventListener('mouseup', () => {
    dragging = false;
  });

  $('fit-gmm').addEventListener('click', () => {
    const { api, session } = state;
    if (!api || !session) return;
    api
      .fitGmm(session.sessionId, session.params.k, session.params.em_seed)
      .then((gmm) => {
        renderSwatches(gmm);
        showError('');
      })
      .catch((err) => showError(String(err)));
  });

  $('accept').addEventListener('click', () => {
    const { api, session } = state;
    if (!api || !session) return;
    const outPath = $<HTMLInputElement>('out-path').value;
    if (!outPath) {
      showError('choose an output path before accepting');
      return;
    }
    api
      .accept(session.sessionId, session.params, outPath)
      .then((resp) => {
        session.markSaved();
        $('accept-status').textContent = `saved: ${resp.written.join(', ')}`;
        showError('');
      })
      .catch((err) => showError(String(err)));
  });
}

function bindUpload(): void {
  $<HTMLInputElement>('file-input').addEventListener('change', async (e) => {
    const input = e.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    const api = new ApiClient($<HTMLInputElement>('api-base').value.replace(/\/$/, ''));
    try {
      const bytes = new Uint8Array(await file.arrayBuffer());
      decodePnm(bytes); // reject non-PNM uploads before they hit the wire
      const info = await api.createSession(bytes);
      state.api = api;
      const scheduler = new PreviewScheduler(
        (params) => api.preview(info.id, params),
        (resp) => applyPreview(resp),
        (message) => showError(message),
      );
      state.session = new TuningSession(info.id, scheduler);
      $('session-meta').textContent = `session ${info.id.slice(0, 8)} (${info.width}x${info.height})`;
      refreshHistogram();
      scheduler.request(state.session.params);
    } catch (err) {
      showError(String(err));
    }
  });
}

export function boot(): void {
  bindUpload();
  bindControls();
}

if (typeof document !== 'undefined') {
  document.addEventListener('DOMContentLoaded', boot);
}
