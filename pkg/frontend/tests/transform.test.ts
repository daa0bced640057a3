import { describe, expect, it } from "vitest";

import {
  defaultViewport,
  fitBounds,
  mmToPx,
  panBy,
  pxToMm,
  zoomAt,
} from "../src/transform.js";

describe("viewport transforms", () => {
  it("mm->px->mm round trips", () => {
    const v = defaultViewport();
    const [px, py] = mmToPx(v, 123.4, -56.7);
    const [x, y] = pxToMm(v, px, py);
    expect(x).toBeCloseTo(123.4, 9);
    expect(y).toBeCloseTo(-56.7, 9);
  });

  it("model y points up on screen", () => {
    const v = defaultViewport();
    const [, pyLow] = mmToPx(v, 0, 0);
    const [, pyHigh] = mmToPx(v, 0, 10);
    expect(pyHigh).toBeLessThan(pyLow);
  });

  it("zoom keeps the cursor's model point fixed", () => {
    const v = defaultViewport();
    const cursor: [number, number] = [200, 150];
    const before = pxToMm(v, ...cursor);
    const v2 = zoomAt(v, cursor[0], cursor[1], 1.7);
    const after = pxToMm(v2, ...cursor);
    expect(after[0]).toBeCloseTo(before[0], 9);
    expect(after[1]).toBeCloseTo(before[1], 9);
    expect(v2.scale).toBeCloseTo(v.scale * 1.7, 9);
  });

  it("zoom clamps extreme factors", () => {
    let v = defaultViewport();
    for (let i = 0; i < 60; i++) v = zoomAt(v, 0, 0, 10);
    expect(v.scale).toBeLessThanOrEqual(200);
  });

  it("pan shifts by pixels", () => {
    const v = defaultViewport();
    const v2 = panBy(v, 15, -8);
    expect(v2.offsetX).toBe(v.offsetX + 15);
    expect(v2.offsetY).toBe(v.offsetY - 8);
  });

  it("fitBounds frames the model box inside the canvas", () => {
    const v = fitBounds(defaultViewport(), [-15, 0], [135, 120], 800, 600, 40);
    for (const corner of [
      [-15, 0],
      [135, 0],
      [-15, 120],
      [135, 120],
    ] as [number, number][]) {
      const [px, py] = mmToPx(v, corner[0], corner[1]);
      expect(px).toBeGreaterThanOrEqual(39.9);
      expect(px).toBeLessThanOrEqual(760.1);
      expect(py).toBeGreaterThanOrEqual(39.9);
      expect(py).toBeLessThanOrEqual(560.1);
    }
  });
});
