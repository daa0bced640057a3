/**
 * Canvas viewport: pan/zoom mapping between millimetre (model) space and
 * pixel (screen) space. Pure math, no DOM.
 */

export interface Viewport {
  /** pixels per millimetre */
  scale: number;
  /** screen position of model origin, px */
  offsetX: number;
  offsetY: number;
  /** canvas height, px (model y points up, screen y points down) */
  height: number;
}

export function defaultViewport(height = 600): Viewport {
  return { scale: 3, offsetX: 60, offsetY: height - 60, height };
}

export function mmToPx(v: Viewport, x: number, y: number): [number, number] {
  return [v.offsetX + x * v.scale, v.offsetY - y * v.scale];
}

export function pxToMm(v: Viewport, px: number, py: number): [number, number] {
  return [(px - v.offsetX) / v.scale, (v.offsetY - py) / v.scale];
}

/** Zoom by a factor keeping the model point under the cursor fixed. */
export function zoomAt(v: Viewport, px: number, py: number, factor: number): Viewport {
  const clamped = Math.min(Math.max(v.scale * factor, 0.05), 200);
  const real = clamped / v.scale;
  return {
    ...v,
    scale: clamped,
    offsetX: px - (px - v.offsetX) * real,
    offsetY: py - (py - v.offsetY) * real,
  };
}

export function panBy(v: Viewport, dx: number, dy: number): Viewport {
  return { ...v, offsetX: v.offsetX + dx, offsetY: v.offsetY + dy };
}

/** Fit a model bounding box into the canvas with a margin. */
export function fitBounds(
  v: Viewport,
  lo: [number, number],
  hi: [number, number],
  width: number,
  height: number,
  marginPx = 40,
): Viewport {
  const spanX = Math.max(hi[0] - lo[0], 1e-9);
  const spanY = Math.max(hi[1] - lo[1], 1e-9);
  const scale = Math.min(
    (width - 2 * marginPx) / spanX,
    (height - 2 * marginPx) / spanY,
  );
  return {
    scale,
    offsetX: marginPx - lo[0] * scale + (width - 2 * marginPx - spanX * scale) / 2,
    offsetY: height - marginPx + lo[1] * scale - (height - 2 * marginPx - spanY * scale) / 2,
    height,
  };
}
