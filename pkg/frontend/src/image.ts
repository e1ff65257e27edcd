/** Grayscale rendering of magnitude images and phantom slices: a pure
 * float-to-RGBA mapping (windowed to the data range) plus a canvas blit. */

export function toRgba(values: ArrayLike<number>, width: number, height: number,
                       vmax?: number): Uint8ClampedArray {
  const n = width * height;
  const out = new Uint8ClampedArray(n * 4);
  let hi = vmax ?? 0;
  if (vmax === undefined) {
    for (let i = 0; i < n; i++) hi = Math.max(hi, values[i]);
  }
  if (hi <= 0) hi = 1;
  for (let i = 0; i < n; i++) {
    const g = Math.round((Math.max(0, values[i]) / hi) * 255);
    out[i * 4] = g;
    out[i * 4 + 1] = g;
    out[i * 4 + 2] = g;
    out[i * 4 + 3] = 255;
  }
  return out;
}

/** Blit a row-major image scaled into the canvas with nearest-neighbor pixels. */
export function blitImage(canvas: HTMLCanvasElement, rgba: Uint8ClampedArray,
                          width: number, height: number): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return; // headless environment: rendering buffers are still exposed
  // lib.dom's ImageData parameter type varies across TS versions; adapt to it
  const data = rgba as unknown as ConstructorParameters<typeof ImageData>[0];
  const image = new ImageData(data, width, height);
  const off = document.createElement("canvas");
  off.width = width;
  off.height = height;
  const octx = off.getContext("2d");
  if (!octx) return;
  octx.putImageData(image, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
}
