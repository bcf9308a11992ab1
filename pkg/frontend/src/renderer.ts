/**
 * three.js view of the scene state: fundus-shaded inner sphere, the two
 * instruments, and per-module visuals (red/green target spheres, the shaving
 * path and its tracking sphere, membrane patches, treatment annuli with
 * per-cell tint).  Magnification is a pure camera transform.
 */
import * as THREE from "three";
import type { SceneState } from "./sceneState.js";

const RETINA_RADIUS = 12.0;

function fundusTexture(): THREE.CanvasTexture {
  const c = document.createElement("canvas");
  c.width = c.height = 512;
  const ctx = c.getContext("2d")!;
  const grad = ctx.createRadialGradient(256, 256, 40, 256, 256, 360);
  grad.addColorStop(0, "#a33a1f");   // macula
  grad.addColorStop(0.5, "#c4552c");
  grad.addColorStop(1, "#d8764a");   // periphery
  ctx.fillStyle = grad;
  ctx.fillRect(0, 0, 512, 512);
  ctx.strokeStyle = "#7e1f12";
  ctx.lineWidth = 3;
  for (let i = 0; i < 18; i++) {      // schematic vessels
    ctx.beginPath();
    const a = (i / 18) * Math.PI * 2;
    ctx.moveTo(256 + 40 * Math.cos(a), 256 + 40 * Math.sin(a));
    ctx.quadraticCurveTo(
      256 + 180 * Math.cos(a + 0.4), 256 + 180 * Math.sin(a + 0.4),
      256 + 250 * Math.cos(a + 0.1), 256 + 250 * Math.sin(a + 0.1));
    ctx.stroke();
  }
  return new THREE.CanvasTexture(c);
}

export class SceneRenderer {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private renderer: THREE.WebGLRenderer;
  private spheres: THREE.Mesh[] = [];
  private patches: THREE.Mesh[] = [];
  private cellSprites: THREE.Mesh[][] = [];
  private breakMarkers: THREE.Mesh[] = [];
  private trackingSphere: THREE.Mesh | null = null;
  private rightShaft: THREE.Line;
  private leftShaft: THREE.Line;
  private rightTipDot: THREE.Mesh;

  constructor(canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(
      55, canvas.width / canvas.height, 0.1, 100);
    // surgeon's view: from the anterior segment looking at the fundus
    this.camera.position.set(0, 0, 8);
    this.camera.lookAt(0, 0, -RETINA_RADIUS);

    const globe = new THREE.Mesh(
      new THREE.SphereGeometry(RETINA_RADIUS, 48, 48),
      new THREE.MeshLambertMaterial({ map: fundusTexture(), side: THREE.BackSide }));
    this.scene.add(globe);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.55));
    const lamp = new THREE.PointLight(0xffffff, 1.1);
    lamp.position.set(0, 0, 4);
    this.scene.add(lamp);

    const mkShaft = (color: number) => {
      const geo = new THREE.BufferGeometry().setFromPoints([
        new THREE.Vector3(), new THREE.Vector3()]);
      const line = new THREE.Line(geo, new THREE.LineBasicMaterial({ color }));
      this.scene.add(line);
      return line;
    };
    this.rightShaft = mkShaft(0xdddddd);
    this.leftShaft = mkShaft(0xfff2ae);
    this.rightTipDot = new THREE.Mesh(
      new THREE.SphereGeometry(0.25, 12, 12),
      new THREE.MeshBasicMaterial({ color: 0xffffff }));
    this.scene.add(this.rightTipDot);
  }

  buildLayout(state: SceneState): void {
    for (const s of state.spheres) {
      const mesh = new THREE.Mesh(
        new THREE.SphereGeometry(s.radius, 20, 20),
        new THREE.MeshLambertMaterial({ color: 0xcc2222 }));
      mesh.position.set(...s.center);
      this.scene.add(mesh);
      this.spheres.push(mesh);
    }
    if (state.pathPolyline.length > 1) {
      const pts = state.pathPolyline.map((p) => new THREE.Vector3(...p));
      this.scene.add(new THREE.Line(
        new THREE.BufferGeometry().setFromPoints(pts),
        new THREE.LineBasicMaterial({ color: 0x66ccff })));
      this.trackingSphere = new THREE.Mesh(
        new THREE.SphereGeometry(state.trackingRadius || 1.2, 16, 16),
        new THREE.MeshLambertMaterial({ color: 0xcc2222 }));
      this.scene.add(this.trackingSphere);
    }
    for (const p of state.patches) {
      const mesh = new THREE.Mesh(
        new THREE.SphereGeometry(0.28, 10, 10),
        new THREE.MeshLambertMaterial({ color: 0xb9c4cc }));
      mesh.position.set(...p.center);
      this.scene.add(mesh);
      this.patches.push(mesh);
    }
    state.breaks.forEach((b) => {
      const marker = new THREE.Mesh(
        new THREE.SphereGeometry(0.5, 14, 14),
        new THREE.MeshLambertMaterial({ color: 0x552222 }));
      marker.position.set(...b.center);
      this.scene.add(marker);
      this.breakMarkers.push(marker);
      const cells = b.cells.map((c) => {
        const cell = new THREE.Mesh(
          new THREE.SphereGeometry(0.18, 8, 8),
          new THREE.MeshBasicMaterial({ color: 0x333333 }));
        cell.position.set(...c);
        this.scene.add(cell);
        return cell;
      });
      this.cellSprites.push(cells);
    });
  }

  apply(state: SceneState): void {
    state.spheres.forEach((s, i) => {
      const mesh = this.spheres[i];
      const mat = mesh.material as THREE.MeshLambertMaterial;
      mesh.visible = !s.collected || state.completed;
      mat.color.setHex(s.collected ? 0x22bb44 : s.active ? 0xff8844 : 0xcc2222);
    });
    if (this.trackingSphere && state.trackingSphere) {
      this.trackingSphere.position.set(...state.trackingSphere);
      (this.trackingSphere.material as THREE.MeshLambertMaterial).color.setHex(
        state.pathProgress >= 1 ? 0x22bb44 : 0xcc2222);
    }
    state.patches.forEach((p, i) => {
      this.patches[i].visible = p.attached;
    });
    state.breaks.forEach((b, i) => {
      (this.breakMarkers[i].material as THREE.MeshLambertMaterial).color.setHex(
        b.treated ? 0x22bb44 : 0x552222);
      b.coverage.forEach((c, j) => {
        const mat = this.cellSprites[i][j].material as THREE.MeshBasicMaterial;
        mat.color.setRGB(0.2 + 0.6 * c, 0.2 + 0.7 * c, 0.2);
      });
    });
    this.rightTipDot.position.set(...state.rightTip);
    const shaftFrom = (tip: number[], axis: number[]) => [
      new THREE.Vector3(tip[0] - axis[0] * 25, tip[1] - axis[1] * 25, tip[2] - axis[2] * 25),
      new THREE.Vector3(tip[0], tip[1], tip[2]),
    ];
    this.rightShaft.geometry.setFromPoints(
      shaftFrom(state.rightTip, state.rightAxis));
    this.leftShaft.geometry.setFromPoints(
      shaftFrom(state.leftTip, [0.4, -0.4, -0.82]));
    // magnification: camera-only 2x, no engine-side effect
    this.camera.zoom = state.magnified ? 2.0 : 1.0;
    this.camera.updateProjectionMatrix();
  }

  render(): void {
    this.renderer.render(this.scene, this.camera);
  }
}
