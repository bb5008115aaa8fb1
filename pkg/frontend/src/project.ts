/** Geometry helpers for the latent views: unit-norm projection for spherical
 * latents and the paired-hemisphere disc projection used to draw them. */

export function norm(v: number[]): number {
  return Math.sqrt(v.reduce((acc, x) => acc + x * x, 0));
}

/** Project a spherical latent onto the unit sphere before it leaves the UI. */
export function toUnitSphere(z: number[]): number[] {
  const n = norm(z);
  if (!isFinite(n) || n === 0) throw new Error('cannot normalize a zero latent vector');
  return z.map((x) => x / n);
}

export interface Hemisphere {
  x: number;
  y: number;
  upper: boolean; // z3 >= 0
}

/** Orthographic projection of S^2 onto two discs split by the sign of z3. */
export function hemisphereProject(z: number[]): Hemisphere {
  if (z.length !== 3) throw new Error('hemisphere projection expects 3 components');
  return { x: z[0], y: z[1], upper: z[2] >= 0 };
}

/** Invert the disc pick back onto the sphere for the chosen hemisphere. */
export function hemisphereUnproject(x: number, y: number, upper: boolean): number[] {
  const r2 = x * x + y * y;
  if (r2 > 1) {
    const r = Math.sqrt(r2);
    x /= r;
    y /= r;
  }
  const z3 = Math.sqrt(Math.max(0, 1 - x * x - y * y));
  return toUnitSphere([x, y, upper ? z3 : -z3]);
}

/** Clamp a disc pick for planar (gauss) latents into the drawn bounds. */
export function clampToBox(z: number[], lo: number[], hi: number[]): number[] {
  return z.map((v, i) => Math.min(Math.max(v, lo[i]), hi[i]));
}
