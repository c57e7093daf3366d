// Tuning parameters and client-side validation mirroring the server's
// invariants, so obviously bad values never leave the browser.

export interface TuningParams {
  bright_medium: boolean;
  contrast_kind: 'identity' | 'gamma' | 'log';
  contrast_param: number;
  threshold: string; // "adaptive" | "valley" | numeric level in [0,1]
  adaptive_window: number;
  adaptive_bias: number;
  valley_window: number;
  se_shape: 'square' | 'disk' | 'cross';
  close_size: number;
  open_size: number;
  min_area: number;
  text_blur_sigma: number;
  gamma: number;
  k: number;
  em_seed: number;
  bg_seed: number;
  bg_blur_sigma: number;
  em_subsample: number;
}

export function defaultParams(): TuningParams {
  return {
    bright_medium: true,
    contrast_kind: 'gamma',
    contrast_param: 0.8,
    threshold: 'adaptive',
    adaptive_window: 31,
    adaptive_bias: 0.2,
    valley_window: 11,
    se_shape: 'square',
    close_size: 3,
    open_size: 3,
    min_area: 8,
    text_blur_sigma: 0.5,
    gamma: 0.7,
    k: 4,
    em_seed: 0,
    bg_seed: 0,
    bg_blur_sigma: 2.0,
    em_subsample: 200000,
  };
}

export function validateParams(p: TuningParams): string[] {
  const errors: string[] = [];
  if (!(p.gamma > 0 && p.gamma < 1)) {
    errors.push('gamma must be strictly between 0 and 1');
  }
  if (!(Number.isInteger(p.k) && p.k >= 1 && p.k <= 8)) {
    errors.push('K must be an integer between 1 and 8');
  }
  if (p.threshold !== 'adaptive' && p.threshold !== 'valley') {
    const level = Number(p.threshold);
    if (!Number.isFinite(level) || level < 0 || level > 1) {
      errors.push('threshold must be adaptive, valley, or a level in [0,1]');
    }
  }
  if (p.adaptive_window < 3 || p.adaptive_window % 2 === 0) {
    errors.push('adaptive window must be odd and at least 3');
  }
  if (p.valley_window < 1 || p.valley_window % 2 === 0) {
    errors.push('valley window must be odd and at least 1');
  }
  if (p.contrast_kind !== 'identity' && p.contrast_param <= 0) {
    errors.push('contrast parameter must be positive');
  }
  if (p.close_size < 0 || p.open_size < 0) {
    errors.push('morphology sizes cannot be negative');
  }
  if (p.min_area < 1) {
    errors.push('speckle area must be at least 1');
  }
  if (p.text_blur_sigma < 0 || p.bg_blur_sigma < 0) {
    errors.push('blur sigmas cannot be negative');
  }
  if (p.em_subsample < 1) {
    errors.push('EM subsample cap must be at least 1');
  }
  return errors;
}

/** Wire form: everything the server's config layer accepts. */
export function toWire(p: TuningParams): Record<string, unknown> {
  return { ...p };
}
