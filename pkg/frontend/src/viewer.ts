// three.js scene for one deformation session: orbitable shaded mesh,
// vertex picking by ray hit, and handle dragging on a camera-parallel
// plane through the grab point.

import * as THREE from "three";
import { OrbitControls } from "three/addons/controls/OrbitControls.js";

import { MeshPayload } from "./protocol.js";

export interface PickResult {
  vertex: number;
  point: THREE.Vector3;
}

export interface ViewerHandlers {
  // pointerdown on a handle vertex begins a drag; the viewer suspends
  // orbiting until pointerup
  onDragMove?: (vertex: number, position: [number, number, number]) => void;
  onDragEnd?: (vertex: number) => void;
  onPick?: (pick: PickResult) => void;
}

export class Viewer {
  readonly renderer: THREE.WebGLRenderer;
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  readonly controls: OrbitControls;

  private surface: THREE.Mesh | null = null;
  private geometry: THREE.BufferGeometry | null = null;
  private handleMarkers = new Map<number, THREE.Mesh>();
  private markerGeometry: THREE.SphereGeometry | null = null;
  private diameter = 1;

  private readonly raycaster = new THREE.Raycaster();
  private readonly dragPlane = new THREE.Plane();
  private dragVertex: number | null = null;

  constructor(
    readonly container: HTMLElement,
    private readonly handlers: ViewerHandlers = {},
  ) {
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setPixelRatio(Math.min(window.devicePixelRatio, 2));
    this.renderer.setSize(container.clientWidth, container.clientHeight);
    this.renderer.setClearColor(0x14171c);
    container.appendChild(this.renderer.domElement);

    const aspect = container.clientWidth / Math.max(1, container.clientHeight);
    this.camera = new THREE.PerspectiveCamera(45, aspect, 0.01, 100);
    this.camera.position.set(1.2, -1.4, 1.1);
    this.camera.up.set(0, 0, 1);

    this.controls = new OrbitControls(this.camera, this.renderer.domElement);
    this.controls.enableDamping = true;

    this.scene.add(new THREE.AmbientLight(0xffffff, 0.45));
    const key = new THREE.DirectionalLight(0xffffff, 1.1);
    key.position.set(2, -3, 4);
    this.scene.add(key);
    const fill = new THREE.DirectionalLight(0x8899bb, 0.4);
    fill.position.set(-3, 2, -1);
    this.scene.add(fill);

    const dom = this.renderer.domElement;
    dom.addEventListener("pointerdown", (e) => this.pointerDown(e));
    dom.addEventListener("pointermove", (e) => this.pointerMove(e));
    dom.addEventListener("pointerup", (e) => this.pointerUp(e));
    window.addEventListener("resize", () => this.resize());

    const animate = () => {
      requestAnimationFrame(animate);
      this.controls.update();
      this.renderer.render(this.scene, this.camera);
    };
    animate();
  }

  loadMesh(payload: MeshPayload): void {
    this.clearMesh();
    this.diameter = payload.diameter;
    const geometry = new THREE.BufferGeometry();
    const positions = new Float32Array(payload.positions.flat());
    geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
    geometry.setIndex(payload.faces.flat());
    geometry.computeVertexNormals();
    this.geometry = geometry;

    const material = new THREE.MeshStandardMaterial({
      color: 0x5588cc,
      metalness: 0.05,
      roughness: 0.65,
      side: THREE.DoubleSide,
      flatShading: false,
    });
    this.surface = new THREE.Mesh(geometry, material);
    this.scene.add(this.surface);

    this.markerGeometry = new THREE.SphereGeometry(0.014 * this.diameter, 12, 8);
    this.setHandles(
      payload.constrained.map((v) => ({
        vertex: v,
        position: payload.positions[v] as [number, number, number],
      })),
    );
    this.frameCamera(payload);
  }

  private frameCamera(payload: MeshPayload): void {
    const box = new THREE.Box3();
    for (const p of payload.restPositions) {
      box.expandByPoint(new THREE.Vector3(p[0], p[1], p[2]));
    }
    const center = box.getCenter(new THREE.Vector3());
    this.controls.target.copy(center);
    this.camera.position.copy(center)
      .add(new THREE.Vector3(0.9, -1.1, 0.8).multiplyScalar(this.diameter));
    this.controls.update();
  }

  private clearMesh(): void {
    if (this.surface !== null) {
      this.scene.remove(this.surface);
      this.geometry?.dispose();
      (this.surface.material as THREE.Material).dispose();
    }
    for (const marker of this.handleMarkers.values()) this.scene.remove(marker);
    this.handleMarkers.clear();
    this.surface = null;
    this.geometry = null;
  }

  // Overwrite vertex positions from one streamed frame.
  updatePositions(positions: Float32Array): void {
    if (this.geometry === null) return;
    const attribute = this.geometry.getAttribute("position") as THREE.BufferAttribute;
    (attribute.array as Float32Array).set(positions);
    attribute.needsUpdate = true;
    this.geometry.computeVertexNormals();
    for (const [vertex, marker] of this.handleMarkers) {
      marker.position.set(
        positions[3 * vertex],
        positions[3 * vertex + 1],
        positions[3 * vertex + 2],
      );
    }
  }

  setHandles(entries: Array<{ vertex: number; position: [number, number, number] }>): void {
    for (const marker of this.handleMarkers.values()) this.scene.remove(marker);
    this.handleMarkers.clear();
    if (this.markerGeometry === null) return;
    for (const { vertex, position } of entries) {
      const marker = new THREE.Mesh(
        this.markerGeometry,
        new THREE.MeshBasicMaterial({ color: 0xffc14f }),
      );
      marker.position.set(position[0], position[1], position[2]);
      this.scene.add(marker);
      this.handleMarkers.set(vertex, marker);
    }
  }

  get handleVertices(): number[] {
    return [...this.handleMarkers.keys()];
  }

  vertexPosition(vertex: number): [number, number, number] {
    if (this.geometry === null) throw new Error("no mesh loaded");
    const attribute = this.geometry.getAttribute("position");
    return [
      attribute.getX(vertex),
      attribute.getY(vertex),
      attribute.getZ(vertex),
    ];
  }

  // Closest ray hit wins (intersections arrive depth-sorted); the picked
  // vertex is the corner of the hit face nearest to the hit point.
  pick(clientX: number, clientY: number): PickResult | null {
    if (this.surface === null || this.geometry === null) return null;
    this.raycaster.setFromCamera(this.pointerNdc(clientX, clientY), this.camera);
    const hits = this.raycaster.intersectObject(this.surface, false);
    if (hits.length === 0) return null;
    const hit = hits[0];
    if (hit.face === undefined || hit.face === null) return null;
    const corners = [hit.face.a, hit.face.b, hit.face.c];
    const attribute = this.geometry.getAttribute("position");
    let vertex = corners[0];
    let best = Infinity;
    for (const corner of corners) {
      const d = hit.point.distanceToSquared(
        new THREE.Vector3().fromBufferAttribute(attribute, corner),
      );
      if (d < best) {
        best = d;
        vertex = corner;
      }
    }
    return { vertex, point: hit.point.clone() };
  }

  private pointerNdc(clientX: number, clientY: number): THREE.Vector2 {
    const rect = this.renderer.domElement.getBoundingClientRect();
    return new THREE.Vector2(
      ((clientX - rect.left) / rect.width) * 2 - 1,
      -((clientY - rect.top) / rect.height) * 2 + 1,
    );
  }

  private pointerDown(event: PointerEvent): void {
    const result = this.pick(event.clientX, event.clientY);
    if (result === null) return;
    this.handlers.onPick?.(result);
    if (!this.handleMarkers.has(result.vertex)) return;
    // drag on the plane through the grab point facing the camera
    const normal = this.camera.getWorldDirection(new THREE.Vector3()).negate();
    this.dragPlane.setFromNormalAndCoplanarPoint(normal, result.point);
    this.dragVertex = result.vertex;
    this.controls.enabled = false;
    this.renderer.domElement.setPointerCapture(event.pointerId);
  }

  private pointerMove(event: PointerEvent): void {
    if (this.dragVertex === null) return;
    this.raycaster.setFromCamera(
      this.pointerNdc(event.clientX, event.clientY),
      this.camera,
    );
    const target = new THREE.Vector3();
    if (this.raycaster.ray.intersectPlane(this.dragPlane, target) === null) return;
    this.handleMarkers.get(this.dragVertex)?.position.copy(target);
    this.handlers.onDragMove?.(this.dragVertex, [target.x, target.y, target.z]);
  }

  private pointerUp(event: PointerEvent): void {
    if (this.dragVertex === null) return;
    const vertex = this.dragVertex;
    this.dragVertex = null;
    this.controls.enabled = true;
    this.renderer.domElement.releasePointerCapture(event.pointerId);
    this.handlers.onDragEnd?.(vertex);
  }

  resize(): void {
    const { clientWidth, clientHeight } = this.container;
    this.camera.aspect = clientWidth / Math.max(1, clientHeight);
    this.camera.updateProjectionMatrix();
    this.renderer.setSize(clientWidth, clientHeight);
  }
}
