/** Minimal wxyz quaternion helpers matching the wire convention. */

export type Quat = [number, number, number, number]; // w, x, y, z
export type V3 = [number, number, number];

export const QUAT_IDENTITY: Quat = [1, 0, 0, 0];

export function quatMultiply(a: Quat, b: Quat): Quat {
  const [w0, x0, y0, z0] = a;
  const [w1, x1, y1, z1] = b;
  return [
    w0 * w1 - x0 * x1 - y0 * y1 - z0 * z1,
    w0 * x1 + x0 * w1 + y0 * z1 - z0 * y1,
    w0 * y1 + y0 * w1 + z0 * x1 - x0 * z1,
    w0 * z1 + z0 * w1 + x0 * y1 - y0 * x1,
  ];
}

export function quatFromAxisAngle(axis: V3, angle: number): Quat {
  const len = Math.hypot(axis[0], axis[1], axis[2]) || 1;
  const s = Math.sin(angle / 2);
  return [
    Math.cos(angle / 2),
    (axis[0] / len) * s,
    (axis[1] / len) * s,
    (axis[2] / len) * s,
  ];
}

export function quatNormalize(q: Quat): Quat {
  const n = Math.hypot(q[0], q[1], q[2], q[3]) || 1;
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

export function quatRotate(q: Quat, v: V3): V3 {
  const [w, x, y, z] = q;
  const cx = y * v[2] - z * v[1] + w * v[0];
  const cy = z * v[0] - x * v[2] + w * v[1];
  const cz = x * v[1] - y * v[0] + w * v[2];
  return [
    v[0] + 2 * (y * cz - z * cy),
    v[1] + 2 * (z * cx - x * cz),
    v[2] + 2 * (x * cy - y * cx),
  ];
}
