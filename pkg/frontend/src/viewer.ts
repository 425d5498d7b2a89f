// three.js robot view: links drawn at FK poses, orbit/zoom camera, and link
// tinting for hovered/selected semantic entities.

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";
import type { GeometryPayload, PoseJson } from "./types";

const LINK_COLOR = 0x8899aa;
const HIGHLIGHT_COLOR = 0xff8822;

export class RobotViewer {
  private renderer: THREE.WebGLRenderer;
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private controls: OrbitControls;
  private linkGroups = new Map<string, THREE.Group>();
  private materials = new Map<string, THREE.MeshLambertMaterial>();
  private fallback: HTMLElement | null = null;

  constructor(private container: HTMLElement) {
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setSize(container.clientWidth || 480, container.clientHeight || 360);
    container.appendChild(this.renderer.domElement);
    this.camera = new THREE.PerspectiveCamera(
      50,
      (container.clientWidth || 480) / (container.clientHeight || 360),
      0.01,
      50,
    );
    this.camera.position.set(1.2, -1.2, 0.9);
    this.camera.up.set(0, 0, 1);
    this.scene.background = new THREE.Color(0x1c2128);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(2, -1, 3);
    this.scene.add(sun);
    this.scene.add(new THREE.GridHelper(2, 20, 0x334, 0x223).rotateX(Math.PI / 2));
    this.controls = new OrbitControls(this.camera, this.renderer.domElement);
    this.controls.target.set(0, 0, 0.4);
    const animate = () => {
      requestAnimationFrame(animate);
      this.controls.update();
      this.renderer.render(this.scene, this.camera);
    };
    animate();
  }

  showFallback(message: string): void {
    if (this.fallback === null) {
      this.fallback = document.createElement("div");
      this.fallback.className = "viewer-fallback";
      this.container.appendChild(this.fallback);
    }
    this.fallback.textContent = message;
  }

  clearFallback(): void {
    this.fallback?.remove();
    this.fallback = null;
  }

  loadGeometry(payload: GeometryPayload): void {
    this.clearFallback();
    for (const group of this.linkGroups.values()) {
      this.scene.remove(group);
    }
    this.linkGroups.clear();
    this.materials.clear();
    for (const link of payload.links) {
      const group = new THREE.Group();
      group.name = link.name;
      const material = new THREE.MeshLambertMaterial({ color: LINK_COLOR });
      this.materials.set(link.name, material);
      const entries = link.visuals.length > 0 ? link.visuals : link.collisions;
      for (const entry of entries) {
        const geometry = new THREE.BufferGeometry();
        const vertices = new Float32Array(entry.mesh.vertices.flat());
        const indices = entry.mesh.faces.flat();
        geometry.setAttribute("position", new THREE.BufferAttribute(vertices, 3));
        geometry.setIndex(indices);
        geometry.computeVertexNormals();
        group.add(new THREE.Mesh(geometry, material));
      }
      this.scene.add(group);
      this.linkGroups.set(link.name, group);
    }
    this.setPoses(payload.default_poses);
  }

  setPoses(poses: Record<string, PoseJson>): void {
    for (const [name, pose] of Object.entries(poses)) {
      const group = this.linkGroups.get(name);
      if (group === undefined) {
        continue;
      }
      group.position.set(pose.xyz[0], pose.xyz[1], pose.xyz[2]);
      group.quaternion.set(pose.quat[0], pose.quat[1], pose.quat[2], pose.quat[3]);
    }
  }

  setHighlight(links: Set<string>): void {
    for (const [name, material] of this.materials) {
      material.color.setHex(links.has(name) ? HIGHLIGHT_COLOR : LINK_COLOR);
    }
  }

  dispose(): void {
    this.renderer.dispose();
    this.renderer.domElement.remove();
  }
}
