/**
 * three.js scene wrapper: ribbon meshes bound to StrokeBuffer arrays,
 * semi-transparent reference scaffolds, a small orbit camera, and the
 * controller gizmo (disk for the normal brush, ruling segment for strip).
 *
 * Stroke geometry is appended in place: the BufferAttribute wraps the
 * stroke's backing array and only the draw range + a needsUpdate flag
 * change per delta, unless the buffer grew and the attribute is rebound.
 */
import * as THREE from "three";
import type { StrokeBuffer } from "./ribbonBuffer.js";
import type { BrushKind, SurfaceDescriptor } from "./protocol.js";

const BRUSH_COLORS: Record<BrushKind, number> = {
  normal: 0x3aa655, // green, as in the study figures
  strip: 0x8c4fd0,  // purple
};

export class StrokeMesh {
  readonly mesh: THREE.Mesh;
  private attr: THREE.BufferAttribute;
  private generation: number;

  constructor(private buffer: StrokeBuffer, brush: BrushKind) {
    const geo = new THREE.BufferGeometry();
    this.attr = new THREE.BufferAttribute(buffer.backing, 3);
    this.attr.setUsage(THREE.DynamicDrawUsage);
    geo.setAttribute("position", this.attr);
    geo.setDrawRange(0, buffer.quadCount * 6);
    this.generation = buffer.generation;
    const mat = new THREE.MeshBasicMaterial({
      color: BRUSH_COLORS[brush],
      side: THREE.DoubleSide,
      transparent: true,
      opacity: 0.95,
    });
    this.mesh = new THREE.Mesh(geo, mat);
    this.mesh.frustumCulled = false;
  }

  /** Reflect newly appended quads without re-uploading old data. */
  sync(): void {
    const geo = this.mesh.geometry as THREE.BufferGeometry;
    if (this.buffer.generation !== this.generation) {
      // backing array was reallocated: rebind
      this.attr = new THREE.BufferAttribute(this.buffer.backing, 3);
      this.attr.setUsage(THREE.DynamicDrawUsage);
      geo.setAttribute("position", this.attr);
      this.generation = this.buffer.generation;
    }
    geo.setDrawRange(0, this.buffer.quadCount * 6);
    this.attr.needsUpdate = true;
  }

  dispose(): void {
    this.mesh.geometry.dispose();
    (this.mesh.material as THREE.Material).dispose();
  }
}

function ghostGeometry(desc: SurfaceDescriptor): THREE.BufferGeometry {
  const p = desc.params;
  switch (desc.kind) {
    case "sphere":
      return new THREE.SphereGeometry(p.radius ?? 0.5, 48, 32);
    case "hemisphere":
      return new THREE.SphereGeometry(p.radius ?? 0.5, 48, 24, 0, Math.PI * 2, 0, Math.PI / 2);
    case "torus": {
      const geo = new THREE.TorusGeometry(p.major_radius ?? 0.35, p.minor_radius ?? 0.15, 32, 64);
      geo.rotateX(Math.PI / 2); // torus axis = +Z in the kernel's local frame
      return geo;
    }
    case "cylinder": {
      const h = p.height ?? 0.6;
      const geo = new THREE.CylinderGeometry(p.radius ?? 0.25, p.radius ?? 0.25, h, 48, 1, true);
      geo.rotateX(Math.PI / 2);
      return geo;
    }
    case "cone": {
      const h = p.height ?? 0.5;
      const geo = new THREE.ConeGeometry(p.radius ?? 0.25, h, 48, 1, true);
      geo.rotateX(Math.PI / 2);
      geo.translate(0, 0, h / 2);
      return geo;
    }
    case "square": {
      const s = p.size ?? 1.0;
      return new THREE.PlaneGeometry(s, s);
    }
    case "circle":
      return new THREE.CircleGeometry(p.radius ?? 0.5, 64);
    case "triangle": {
      const s = p.size ?? 1.0;
      const h3 = (s * Math.sqrt(3)) / 6;
      const geo = new THREE.BufferGeometry();
      geo.setAttribute(
        "position",
        new THREE.Float32BufferAttribute(
          [-s / 2, -h3, 0, s / 2, -h3, 0, 0, 2 * h3, 0],
          3,
        ),
      );
      return geo;
    }
    case "saddle": {
      const c = p.coeff ?? 1.0;
      const e = p.extent ?? 0.4;
      return gridGeometry(32, (u, v) => {
        const x = -e + 2 * e * u;
        const y = -e + 2 * e * v;
        return [x, y, c * (x * x - y * y)];
      });
    }
    case "ellipsoid": {
      const geo = new THREE.SphereGeometry(1.0, 48, 32);
      geo.scale(p.a ?? 0.5, p.b ?? 0.4, p.c ?? 0.3);
      return geo;
    }
    default:
      return new THREE.SphereGeometry(0.2, 16, 12);
  }
}

function gridGeometry(
  n: number,
  f: (u: number, v: number) => [number, number, number],
): THREE.BufferGeometry {
  const pos: number[] = [];
  const idx: number[] = [];
  for (let i = 0; i <= n; i++) {
    for (let j = 0; j <= n; j++) {
      pos.push(...f(i / n, j / n));
    }
  }
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      const a = i * (n + 1) + j;
      const b = a + n + 1;
      idx.push(a, b, a + 1, b, b + 1, a + 1);
    }
  }
  const geo = new THREE.BufferGeometry();
  geo.setAttribute("position", new THREE.Float32BufferAttribute(pos, 3));
  geo.setIndex(idx);
  geo.computeVertexNormals();
  return geo;
}

export class SandboxScene {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private renderer: THREE.WebGLRenderer;
  private ghost: THREE.Mesh | null = null;
  private strokeMeshes = new Map<THREE.Mesh, StrokeMesh>();
  private gizmo: THREE.Group;
  private gizmoDisk: THREE.Mesh;
  private gizmoRuling: THREE.Mesh;
  // orbit state
  private orbitTheta = 0.6;
  private orbitPhi = 1.1;
  private orbitRadius = 1.6;

  constructor(canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(55, 1, 0.01, 50);
    this.scene.background = new THREE.Color(0x101218);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.8));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(2, 3, 2);
    this.scene.add(sun);
    this.scene.add(new THREE.GridHelper(2, 20, 0x334455, 0x223344));

    this.gizmo = new THREE.Group();
    this.gizmoDisk = new THREE.Mesh(
      new THREE.CircleGeometry(0.035, 32),
      new THREE.MeshBasicMaterial({
        color: 0x3aa655, side: THREE.DoubleSide, transparent: true, opacity: 0.7,
      }),
    );
    this.gizmoDisk.rotateX(Math.PI / 2); // disk normal = controller up (+Y)
    this.gizmoRuling = new THREE.Mesh(
      new THREE.BoxGeometry(0.07, 0.004, 0.004),
      new THREE.MeshBasicMaterial({ color: 0x8c4fd0 }),
    );
    this.gizmo.add(this.gizmoDisk, this.gizmoRuling, new THREE.AxesHelper(0.05));
    this.scene.add(this.gizmo);
    this.updateCamera();
  }

  resize(width: number, height: number): void {
    this.renderer.setSize(width, height, false);
    this.camera.aspect = width / Math.max(1, height);
    this.camera.updateProjectionMatrix();
  }

  orbit(dTheta: number, dPhi: number): void {
    this.orbitTheta += dTheta;
    this.orbitPhi = Math.min(Math.PI - 0.05, Math.max(0.05, this.orbitPhi + dPhi));
    this.updateCamera();
  }

  zoom(factor: number): void {
    this.orbitRadius = Math.min(8, Math.max(0.3, this.orbitRadius * factor));
    this.updateCamera();
  }

  private updateCamera(): void {
    const r = this.orbitRadius;
    this.camera.position.set(
      r * Math.sin(this.orbitPhi) * Math.cos(this.orbitTheta),
      r * Math.cos(this.orbitPhi),
      r * Math.sin(this.orbitPhi) * Math.sin(this.orbitTheta),
    );
    this.camera.lookAt(0, 0, 0);
    this.camera.updateMatrixWorld();
  }

  cameraBasis(): { right: [number, number, number]; up: [number, number, number]; forward: [number, number, number] } {
    const m = this.camera.matrixWorld.elements;
    return {
      right: [m[0], m[1], m[2]],
      up: [m[4], m[5], m[6]],
      forward: [-m[8], -m[9], -m[10]],
    };
  }

  setGhost(desc: SurfaceDescriptor | null): void {
    if (this.ghost) {
      this.scene.remove(this.ghost);
      this.ghost.geometry.dispose();
      (this.ghost.material as THREE.Material).dispose();
      this.ghost = null;
    }
    if (!desc) return;
    const mat = new THREE.MeshStandardMaterial({
      color: 0x99bbff,
      transparent: true,
      opacity: 0.3, // "semi-transparent surface" scaffold ghosting
      side: THREE.DoubleSide,
      depthWrite: false,
    });
    const geo = ghostGeometry(desc);
    // kernel local frames use +Z-up revolution axes for solids; the planar
    // shapes live in the z=0 plane already
    this.ghost = new THREE.Mesh(geo, mat);
    this.scene.add(this.ghost);
  }

  addStroke(buffer: StrokeBuffer, brush: BrushKind): StrokeMesh {
    const sm = new StrokeMesh(buffer, brush);
    this.strokeMeshes.set(sm.mesh, sm);
    this.scene.add(sm.mesh);
    return sm;
  }

  removeAllStrokes(): void {
    for (const [mesh, sm] of this.strokeMeshes) {
      this.scene.remove(mesh);
      sm.dispose();
    }
    this.strokeMeshes.clear();
  }

  setGizmo(position: [number, number, number], quat: [number, number, number, number],
           brush: BrushKind): void {
    this.gizmo.position.set(position[0], position[1], position[2]);
    this.gizmo.quaternion.set(quat[1], quat[2], quat[3], quat[0]); // wxyz -> xyzw
    this.gizmoDisk.visible = brush === "normal";
    this.gizmoRuling.visible = brush === "strip";
  }

  render(): void {
    this.renderer.render(this.scene, this.camera);
  }
}
