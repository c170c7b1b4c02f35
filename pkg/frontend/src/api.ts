// Thin typed client for the screening service. Errors carry the HTTP
// status and parsed body so state transitions can map them to warnings.

import type {
  Classification,
  GridParams,
  GridResponse,
  ModelInfo,
  SessionCreated,
  SessionState,
  SessionSummary,
} from "./types.js";

export class ApiFailure extends Error {
  constructor(
    readonly status: number,
    readonly body: unknown,
  ) {
    super(`request failed with status ${status}`);
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  const text = await response.text();
  const body = text ? JSON.parse(text) : null;
  if (!response.ok) {
    throw new ApiFailure(response.status, body);
  }
  return body as T;
}

export async function uploadImage(file: File, laterality?: string): Promise<SessionCreated> {
  const form = new FormData();
  form.append("image", file);
  if (laterality) {
    form.append("laterality", laterality);
  }
  return parseOrThrow(await fetch("/api/sessions", { method: "POST", body: form }));
}

export async function listSessions(): Promise<SessionSummary[]> {
  const doc = await parseOrThrow<{ sessions: SessionSummary[] }>(
    await fetch("/api/sessions"),
  );
  return doc.sessions;
}

export async function getSession(sessionId: string): Promise<SessionState> {
  return parseOrThrow(await fetch(`/api/sessions/${sessionId}`));
}

export function imageUrl(sessionId: string): string {
  return `/api/sessions/${sessionId}/image`;
}

export async function putGrid(sessionId: string, grid: GridParams): Promise<GridResponse> {
  return parseOrThrow(
    await fetch(`/api/sessions/${sessionId}/grid`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(grid),
    }),
  );
}

export async function classify(sessionId: string, modelId: string): Promise<Classification> {
  return parseOrThrow(
    await fetch(`/api/sessions/${sessionId}/classify`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ model_id: modelId }),
    }),
  );
}

export async function listModels(): Promise<ModelInfo[]> {
  const doc = await parseOrThrow<{ models: ModelInfo[] }>(await fetch("/api/models"));
  return doc.models;
}
