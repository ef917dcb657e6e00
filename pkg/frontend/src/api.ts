/** HTTP client for the mesh service, including the binary mesh decoder. */

import type {
  MeshPayload,
  MeshRequestBody,
  ModelInfo,
  SliceGrid,
  SliceRequestBody,
} from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

/** Binary wire format: u32 nVerts, u32 nTris, f32 verts x3, u32 indices x3. */
export function decodeMeshPayload(buffer: ArrayBuffer, evals: number): MeshPayload {
  if (buffer.byteLength < 8) throw new Error("mesh payload too short");
  const header = new DataView(buffer, 0, 8);
  const nVerts = header.getUint32(0, true);
  const nTris = header.getUint32(4, true);
  const expected = 8 + 12 * nVerts + 12 * nTris;
  if (buffer.byteLength !== expected) {
    throw new Error(`mesh payload length ${buffer.byteLength}, expected ${expected}`);
  }
  const vertices = new Float32Array(buffer, 8, 3 * nVerts);
  const indices = new Uint32Array(buffer, 8 + 12 * nVerts, 3 * nTris);
  return { vertices, indices, nVerts, nTris, evals };
}

async function raiseForStatus(resp: Response): Promise<void> {
  if (resp.ok) return;
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (body && typeof body.error === "string") detail = body.error;
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(resp.status, detail);
}

export class ExplorerApi {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (...a) => fetch(...a),
  ) {}

  async modelInfo(): Promise<ModelInfo> {
    const resp = await this.fetchImpl(`${this.baseUrl}/model/info`);
    await raiseForStatus(resp);
    return (await resp.json()) as ModelInfo;
  }

  async mesh(body: MeshRequestBody): Promise<MeshPayload> {
    const resp = await this.fetchImpl(`${this.baseUrl}/mesh`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    await raiseForStatus(resp);
    const evals = Number(resp.headers.get("evals") ?? "0");
    return decodeMeshPayload(await resp.arrayBuffer(), evals);
  }

  async slice(body: SliceRequestBody): Promise<SliceGrid> {
    const resp = await this.fetchImpl(`${this.baseUrl}/slice`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    await raiseForStatus(resp);
    const buffer = await resp.arrayBuffer();
    const values = new Float32Array(buffer);
    if (values.length !== body.res * body.res) {
      throw new Error(`slice grid has ${values.length} values, expected ${body.res ** 2}`);
    }
    return { values, res: body.res, axis: body.axis, offset: body.offset };
  }
}

/** Serialize a decoded mesh as ASCII OBJ (the download link). */
export function meshToObj(mesh: MeshPayload): string {
  const lines: string[] = [];
  for (let i = 0; i < mesh.nVerts; i++) {
    const x = mesh.vertices[3 * i];
    const y = mesh.vertices[3 * i + 1];
    const z = mesh.vertices[3 * i + 2];
    lines.push(`v ${x} ${y} ${z}`);
  }
  for (let i = 0; i < mesh.nTris; i++) {
    const a = mesh.indices[3 * i] + 1;
    const b = mesh.indices[3 * i + 1] + 1;
    const c = mesh.indices[3 * i + 2] + 1;
    lines.push(`f ${a} ${b} ${c}`);
  }
  return lines.join("\n") + "\n";
}
