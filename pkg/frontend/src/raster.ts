/**
 * Pure stroke rasterization: round-capped polylines onto a byte mask.
 *
 * Strokes are recorded in image-pixel coordinates and rasterized at the
 * image's intrinsic size, so the exported mask never inherits CSS scaling or
 * devicePixelRatio. A pixel is painted (255) when its lattice point lies
 * within the brush radius of any stroke segment.
 */

export interface StrokePoint {
  x: number;
  y: number;
}

export interface Stroke {
  points: StrokePoint[];
  radius: number;
}

function segmentDistance(px: number, py: number, a: StrokePoint, b: StrokePoint): number {
  const dx = b.x - a.x;
  const dy = b.y - a.y;
  const len2 = dx * dx + dy * dy;
  let t = len2 > 0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0;
  t = Math.max(0, Math.min(1, t));
  const qx = a.x + t * dx;
  const qy = a.y + t * dy;
  return Math.hypot(px - qx, py - qy);
}

function stampSegment(mask: Uint8Array, width: number, height: number, a: StrokePoint, b: StrokePoint, radius: number): void {
  const x0 = Math.max(0, Math.floor(Math.min(a.x, b.x) - radius));
  const x1 = Math.min(width - 1, Math.ceil(Math.max(a.x, b.x) + radius));
  const y0 = Math.max(0, Math.floor(Math.min(a.y, b.y) - radius));
  const y1 = Math.min(height - 1, Math.ceil(Math.max(a.y, b.y) + radius));
  for (let y = y0; y <= y1; y++) {
    for (let x = x0; x <= x1; x++) {
      if (segmentDistance(x, y, a, b) <= radius) {
        mask[y * width + x] = 255;
      }
    }
  }
}

/** Rasterize strokes to a full-opacity mask of exactly width x height bytes. */
export function strokesToMask(strokes: Stroke[], width: number, height: number): Uint8Array {
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    throw new Error(`bad mask dimensions ${width}x${height}`);
  }
  const mask = new Uint8Array(width * height);
  for (const stroke of strokes) {
    if (stroke.points.length === 0) continue;
    if (stroke.points.length === 1) {
      stampSegment(mask, width, height, stroke.points[0], stroke.points[0], stroke.radius);
      continue;
    }
    for (let i = 0; i + 1 < stroke.points.length; i++) {
      stampSegment(mask, width, height, stroke.points[i], stroke.points[i + 1], stroke.radius);
    }
  }
  return mask;
}

/**
 * Map a pointer event position to image coordinates given the canvas's CSS
 * rect. Uses only the ratio of intrinsic to displayed size, so any
 * devicePixelRatio cancels out.
 */
export function eventToImageCoords(
  clientX: number,
  clientY: number,
  rect: { left: number; top: number; width: number; height: number },
  imageWidth: number,
  imageHeight: number,
): StrokePoint {
  return {
    x: ((clientX - rect.left) * imageWidth) / rect.width,
    y: ((clientY - rect.top) * imageHeight) / rect.height,
  };
}
