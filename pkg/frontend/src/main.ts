// DOM wiring for the grid-placement screen. Every displayed statistic is
// rendered from server responses through formatG17, so the UI can never
// disagree with the CLI about a digit.

import * as api from "./api.js";
import { formatG17, formatShort } from "./format.js";
import {
  clampRadius,
  gaugeReading,
  hitTestRing,
  nasalSide,
  sectorLabelAnchors,
  type RingName,
} from "./geometry.js";
import {
  canClassify,
  highlightedSector,
  initialState,
  withClassification,
  withGridEdit,
  withGridError,
  withGridResult,
  withModels,
  withSession,
  type AppState,
} from "./state.js";
import { SECTOR_IDS, type GridParams, type LateralityCode } from "./types.js";

let state: AppState = initialState();
let image: HTMLImageElement | null = null;
let dragging: RingName | "center" | null = null;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const canvas = $<HTMLCanvasElement>("view");
const ctx = canvas.getContext("2d")!;
const fileInput = $<HTMLInputElement>("file");
const lateralitySelect = $<HTMLSelectElement>("laterality");
const modelSelect = $<HTMLSelectElement>("model");
const classifyButton = $<HTMLButtonElement>("classify");
const statusLine = $("status");
const verdictBox = $("verdict");
const gaugeNeedle = $("gauge-needle");
const statsBody = $("stats-body");
const sessionList = $("session-list");

function setState(next: AppState): void {
  state = next;
  render();
}

function defaultGrid(width: number, height: number): GridParams {
  const r3 = Math.min(width, height) * 0.4;
  return {
    cx: width / 2,
    cy: height / 2,
    r1: r3 / 6,
    r2: r3 / 2,
    r3,
    laterality: lateralitySelect.value as LateralityCode,
  };
}

// ---------------------------------------------------------------------------
// Server interactions

async function refreshModels(): Promise<void> {
  try {
    setState(withModels(state, await api.listModels()));
  } catch {
    setState(withModels(state, []));
  }
}

async function refreshSessions(): Promise<void> {
  try {
    const sessions = await api.listSessions();
    sessionList.replaceChildren(
      ...sessions.map((s) => {
        const item = document.createElement("li");
        const link = document.createElement("a");
        link.href = "#";
        link.textContent = `${s.session_id} (${s.width}x${s.height}${s.has_grid ? ", grid" : ""}${s.has_classification ? ", classified" : ""})`;
        link.addEventListener("click", (event) => {
          event.preventDefault();
          void openSession(s.session_id);
        });
        item.append(link);
        return item;
      }),
    );
  } catch {
    sessionList.replaceChildren();
  }
}

async function openSession(sessionId: string): Promise<void> {
  const session = await api.getSession(sessionId);
  setState(withSession(state, session.session_id, session.width, session.height));
  await loadImage(sessionId);
  if (session.grid) {
    lateralitySelect.value = session.grid.laterality;
    setState(withGridEdit(state, session.grid));
    await pushGrid();
  }
}

function loadImage(sessionId: string): Promise<void> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.onload = () => {
      image = img;
      canvas.width = img.naturalWidth;
      canvas.height = img.naturalHeight;
      render();
      resolve();
    };
    img.onerror = () => reject(new Error("image load failed"));
    img.src = api.imageUrl(sessionId) + `?t=${Date.now()}`;
  });
}

async function pushGrid(): Promise<void> {
  if (!state.sessionId || !state.grid) return;
  try {
    const response = await api.putGrid(state.sessionId, state.grid);
    setState(withGridResult(state, response));
  } catch (err) {
    if (err instanceof api.ApiFailure) {
      setState(withGridError(state, err.status, err.body));
    } else {
      throw err;
    }
  }
}

async function runClassify(): Promise<void> {
  if (!canClassify(state) || !state.sessionId || !state.selectedModel) return;
  const result = await api.classify(state.sessionId, state.selectedModel);
  setState(withClassification(state, result));
  void refreshSessions();
}

// ---------------------------------------------------------------------------
// Events

fileInput.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  const created = await api.uploadImage(file);
  setState(withSession(state, created.session_id, created.width, created.height));
  await loadImage(created.session_id);
  setState(withGridEdit(state, defaultGrid(created.width, created.height)));
  await pushGrid();
  void refreshSessions();
});

lateralitySelect.addEventListener("change", () => {
  if (!state.grid) return;
  setState(
    withGridEdit(state, { ...state.grid, laterality: lateralitySelect.value as LateralityCode }),
  );
  void pushGrid();
});

modelSelect.addEventListener("change", () => {
  setState({ ...state, selectedModel: modelSelect.value || null, classification: null });
});

classifyButton.addEventListener("click", () => void runClassify());

function canvasPoint(event: MouseEvent): { x: number; y: number } {
  const rect = canvas.getBoundingClientRect();
  return {
    x: ((event.clientX - rect.left) / rect.width) * canvas.width,
    y: ((event.clientY - rect.top) / rect.height) * canvas.height,
  };
}

canvas.addEventListener("mousedown", (event) => {
  if (!state.grid) return;
  const { x, y } = canvasPoint(event);
  const hit = hitTestRing(x, y, state.grid, 8);
  dragging = hit ? hit.ring : "center";
  if (dragging === "center") {
    setState(withGridEdit(state, { ...state.grid, cx: x, cy: y }));
  }
});

canvas.addEventListener("mousemove", (event) => {
  if (!dragging || !state.grid) return;
  const { x, y } = canvasPoint(event);
  if (dragging === "center") {
    setState(withGridEdit(state, { ...state.grid, cx: x, cy: y }));
  } else {
    const radius = Math.hypot(x - state.grid.cx, y - state.grid.cy);
    setState(withGridEdit(state, clampRadius(state.grid, dragging, radius)));
  }
});

window.addEventListener("mouseup", () => {
  if (dragging) {
    dragging = null;
    void pushGrid();
  }
});

// click without grid yet: place the fovea center
canvas.addEventListener("click", (event) => {
  if (state.grid || !state.sessionId) return;
  const { x, y } = canvasPoint(event);
  const grid = defaultGrid(canvas.width, canvas.height);
  setState(withGridEdit(state, { ...grid, cx: x, cy: y }));
  void pushGrid();
});

// ---------------------------------------------------------------------------
// Rendering

function render(): void {
  renderCanvas();
  renderStats();
  renderControls();
}

function renderCanvas(): void {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (image) {
    ctx.drawImage(image, 0, 0);
  }
  const grid = state.grid;
  if (!grid) return;
  const highlight = highlightedSector(state);
  const side = nasalSide(grid.laterality);

  ctx.save();
  ctx.lineWidth = 1.5;
  ctx.strokeStyle = state.warning ? "#e05252" : "#4dd2ff";
  for (const r of [grid.r1, grid.r2, grid.r3]) {
    ctx.beginPath();
    ctx.arc(grid.cx, grid.cy, r, 0, Math.PI * 2);
    ctx.stroke();
  }
  // 45-degree diagonals between CSF edge and the outer ring
  for (const angle of [45, 135, 225, 315]) {
    const rad = (angle * Math.PI) / 180;
    ctx.beginPath();
    ctx.moveTo(grid.cx + grid.r1 * Math.cos(rad), grid.cy + grid.r1 * Math.sin(rad));
    ctx.lineTo(grid.cx + grid.r3 * Math.cos(rad), grid.cy + grid.r3 * Math.sin(rad));
    ctx.stroke();
  }
  ctx.font = "11px sans-serif";
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  for (const anchor of sectorLabelAnchors(grid, side)) {
    ctx.fillStyle = anchor.sector === highlight ? "#ff5050" : "#ffffff";
    ctx.fillText(anchor.sector, anchor.x, anchor.y);
  }
  ctx.restore();
}

function renderStats(): void {
  const rows: HTMLTableRowElement[] = [];
  const highlight = highlightedSector(state);
  for (const sector of SECTOR_IDS) {
    const row = document.createElement("tr");
    if (sector === highlight) row.classList.add("warn");
    const stats = state.stats?.[sector];
    const cells = [
      sector,
      stats ? formatG17(stats.mean) : "-",
      stats ? formatG17(stats.std) : "-",
      stats ? String(stats.pixel_count) : "-",
    ];
    for (const text of cells) {
      const cell = document.createElement("td");
      cell.textContent = text;
      row.append(cell);
    }
    rows.push(row);
  }
  statsBody.replaceChildren(...rows);
}

function renderControls(): void {
  modelSelect.replaceChildren(
    ...state.models.map((m) => {
      const option = document.createElement("option");
      option.value = m.model_id;
      option.textContent = `${m.model_id} (${m.kernel}${m.scale_factor ? ` SF=${formatShort(m.scale_factor)}` : ""})`;
      option.selected = m.model_id === state.selectedModel;
      return option;
    }),
  );
  classifyButton.disabled = !canClassify(state);

  if (state.warning) {
    statusLine.textContent =
      state.warning.kind === "empty-sector"
        ? `Sector ${state.warning.sector} has no pixels under this grid - move or enlarge it`
        : state.warning.kind === "invalid-grid"
          ? `Invalid grid: ${state.warning.message}`
          : state.warning.message;
    statusLine.className = "warn";
  } else if (state.pendingGrid) {
    statusLine.textContent = "updating statistics...";
    statusLine.className = "";
  } else if (!state.sessionId) {
    statusLine.textContent = "Upload a grayscale FAF image (PGM or PNG) to begin.";
    statusLine.className = "";
  } else if (!state.grid) {
    statusLine.textContent = "Click the fovea to place the grid.";
    statusLine.className = "";
  } else {
    statusLine.textContent = "Drag the center or ring handles to adjust the grid.";
    statusLine.className = "";
  }

  const result = state.classification;
  if (result) {
    const reading = gaugeReading(result.signed_distance);
    verdictBox.textContent =
      `${result.label === 1 ? "DISEASED" : "HEALTHY"}  ` +
      `decision ${formatG17(result.decision_value)}, ` +
      `signed distance ${formatG17(result.signed_distance)} (model ${result.model_id})`;
    verdictBox.className = result.label === 1 ? "verdict diseased" : "verdict healthy";
    gaugeNeedle.style.left = `${50 + reading.fraction * 50}%`;
    gaugeNeedle.style.visibility = "visible";
  } else {
    verdictBox.textContent = "";
    verdictBox.className = "verdict";
    gaugeNeedle.style.visibility = "hidden";
  }
}

void refreshModels();
void refreshSessions();
render();
