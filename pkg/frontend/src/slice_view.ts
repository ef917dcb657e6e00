/**
 * Signed-distance slice rendering: a diverging colormap symmetric around 0
 * (blue inside, white at the surface, orange outside) with the zero contour
 * drawn in black.
 */

import type { SliceGrid } from "./types";

export type Rgb = [number, number, number];

const INSIDE: Rgb = [38, 84, 188];
const ZERO: Rgb = [245, 245, 245];
const OUTSIDE: Rgb = [214, 122, 30];

function lerp(a: Rgb, b: Rgb, t: number): Rgb {
  return [
    Math.round(a[0] + (b[0] - a[0]) * t),
    Math.round(a[1] + (b[1] - a[1]) * t),
    Math.round(a[2] + (b[2] - a[2]) * t),
  ];
}

/** Linear diverging map on [-maxAbs, maxAbs]; exactly ZERO at value 0. */
export function signedColor(value: number, maxAbs: number): Rgb {
  if (maxAbs <= 0) return ZERO;
  const t = Math.max(-1, Math.min(1, value / maxAbs));
  return t < 0 ? lerp(ZERO, INSIDE, -t) : lerp(ZERO, OUTSIDE, t);
}

/** True where the field changes sign against a right/down neighbor. */
export function zeroContourMask(grid: SliceGrid): Uint8Array {
  const { values, res } = grid;
  const mask = new Uint8Array(res * res);
  for (let i = 0; i < res; i++) {
    for (let j = 0; j < res; j++) {
      const v = values[i * res + j];
      const right = j + 1 < res ? values[i * res + j + 1] : v;
      const down = i + 1 < res ? values[(i + 1) * res + j] : v;
      if (v === 0 || v * right < 0 || v * down < 0) mask[i * res + j] = 1;
    }
  }
  return mask;
}

/** RGBA pixels for the slice; independent of the DOM for testability. */
export function renderSlicePixels(grid: SliceGrid): Uint8ClampedArray<ArrayBuffer> {
  const { values, res } = grid;
  let maxAbs = 0;
  for (const v of values) maxAbs = Math.max(maxAbs, Math.abs(v));
  const contour = zeroContourMask(grid);
  const pixels = new Uint8ClampedArray(res * res * 4);
  for (let k = 0; k < res * res; k++) {
    const [r, g, b] = contour[k] ? [0, 0, 0] : signedColor(values[k], maxAbs);
    pixels[4 * k] = r;
    pixels[4 * k + 1] = g;
    pixels[4 * k + 2] = b;
    pixels[4 * k + 3] = 255;
  }
  return pixels;
}

export function drawSlice(canvas: HTMLCanvasElement, grid: SliceGrid): void {
  canvas.width = grid.res;
  canvas.height = grid.res;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const image = new ImageData(renderSlicePixels(grid), grid.res, grid.res);
  ctx.putImageData(image, 0, 0);
}
