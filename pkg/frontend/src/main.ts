/** App bootstrap: panel controls, viewer, slice inspector, status bar. */

import { ExplorerApi, meshToObj } from "./api";
import { ExplorerController } from "./controller";
import { debounce } from "./debounce";
import { DistanceLod } from "./lod";
import { drawSlice } from "./slice_view";
import { ExplorerStore } from "./state";
import { MeshViewer } from "./viewer";
import type { MeshPayload, ModelInfo } from "./types";

const SERVICE_URL =
  new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8000";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function toast(message: string): void {
  const box = el<HTMLDivElement>("toast");
  box.textContent = message;
  box.classList.add("visible");
  setTimeout(() => box.classList.remove("visible"), 4000);
}

async function boot(): Promise<void> {
  const api = new ExplorerApi(SERVICE_URL);
  let info: ModelInfo;
  try {
    info = await api.modelInfo();
  } catch (err) {
    toast(`service unreachable at ${SERVICE_URL}: ${err}`);
    return;
  }

  const store = new ExplorerStore(info);
  const viewer = new MeshViewer(el("viewport"));
  const lod = new DistanceLod();

  const shapeA = el<HTMLSelectElement>("shape-a");
  const shapeB = el<HTMLSelectElement>("shape-b");
  for (const [i, name] of info.shape_names.entries()) {
    shapeA.add(new Option(name, String(i)));
    shapeB.add(new Option(name, String(i), undefined, i === 1));
  }
  const tSlider = el<HTMLInputElement>("t-slider");
  const levelSlider = el<HTMLInputElement>("level-slider");
  levelSlider.max = String(info.n_layers - 1);
  const resSelect = el<HTMLSelectElement>("res-select");
  for (const r of [32, 64, 128, 256]) {
    if (r <= info.max_resolution) resSelect.add(new Option(`${r}³`, String(r), undefined, r === 128));
  }
  const autoLodBox = el<HTMLInputElement>("auto-lod");
  const flatBox = el<HTMLInputElement>("flat-shading");
  const status = el<HTMLSpanElement>("status");
  const lodTableBox = el<HTMLTextAreaElement>("lod-table");
  lodTableBox.value = lod
    .getTable()
    .map((r) => `${r.maxDistance === Infinity ? "inf" : r.maxDistance} ${r.level}`)
    .join("\n");

  let latest: MeshPayload | null = null;
  const controller = new ExplorerController(store, api, {
    onMesh(mesh) {
      latest = mesh;
      viewer.showMesh(mesh);
      const s = store.get();
      status.textContent =
        `level ${s.level} · ${mesh.nTris.toLocaleString()} triangles · ` +
        `${mesh.evals.toLocaleString()} SDF evals`;
    },
    onError(message) {
      toast(message); // previous mesh stays on screen
    },
  }, lod);

  const sync = () => {
    const s = store.get();
    tSlider.value = String(s.t);
    levelSlider.value = String(s.level);
    shapeA.value = String(s.shapeA);
    shapeB.value = String(s.shapeB);
    el<HTMLSpanElement>("t-value").textContent = s.t.toFixed(2);
    el<HTMLSpanElement>("level-value").textContent = String(s.level);
  };
  store.subscribe(sync);
  sync();

  shapeA.onchange = () => store.update({ shapeA: Number(shapeA.value) });
  shapeB.onchange = () => store.update({ shapeB: Number(shapeB.value) });
  tSlider.oninput = () => store.update({ t: Number(tSlider.value) });
  levelSlider.oninput = () => store.update({ level: Number(levelSlider.value) });
  resSelect.onchange = () => store.update({ resolution: Number(resSelect.value) });
  autoLodBox.onchange = () => store.update({ autoLod: autoLodBox.checked });
  flatBox.onchange = () => viewer.setFlatShading(flatBox.checked);
  lodTableBox.onchange = () => {
    try {
      const rows = lodTableBox.value
        .trim()
        .split("\n")
        .map((line) => {
          const [d, l] = line.trim().split(/\s+/);
          return { maxDistance: d === "inf" ? Infinity : Number(d), level: Number(l) };
        });
      lod.setTable(rows);
    } catch (err) {
      toast(`bad LoD table: ${err}`);
    }
  };

  viewer.onCameraDistance = (distance) => controller.cameraMoved(distance);

  el<HTMLButtonElement>("download-obj").onclick = () => {
    if (!latest) return;
    const blob = new Blob([meshToObj(latest)], { type: "text/plain" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "mesh.obj";
    a.click();
    URL.revokeObjectURL(a.href);
  };

  // slice inspector
  const sliceCanvas = el<HTMLCanvasElement>("slice-canvas");
  const sliceAxis = el<HTMLSelectElement>("slice-axis");
  const sliceOffset = el<HTMLInputElement>("slice-offset");
  const refreshSlice = debounce(async () => {
    const s = store.get();
    try {
      const grid = await api.slice({
        source: s.t <= 0 ? { shape_id: s.shapeA }
          : s.t >= 1 ? { shape_id: s.shapeB }
            : { interpolate: { a: s.shapeA, b: s.shapeB, t: s.t } },
        level: s.level,
        axis: Number(sliceAxis.value),
        offset: Number(sliceOffset.value),
        res: 128,
      });
      drawSlice(sliceCanvas, grid);
    } catch (err) {
      toast(`slice failed: ${err}`);
    }
  }, 150);
  sliceAxis.onchange = refreshSlice;
  sliceOffset.oninput = refreshSlice;
  store.subscribe(() => refreshSlice());

  controller.refreshNow();
  refreshSlice();
}

boot();
