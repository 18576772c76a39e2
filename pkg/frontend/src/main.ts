/**
 * Mask studio: garment grid, mask drawing over the uploaded photo, and the
 * result page with the eraser. All pixel work happens in image coordinates
 * through the pure raster/png modules; the canvas is presentation only.
 */

import { ApiError, Garment, TryOnApi } from "./api.js";
import { encodeGrayPng } from "./png.js";
import { Stroke, eventToImageCoords, strokesToMask } from "./raster.js";
import * as state from "./state.js";

const api = new TryOnApi("..");

let ui = state.initialState();
let garments: Garment[] = [];
let classFilter = "";
let imageWidth = 0;
let imageHeight = 0;
let photo: HTMLImageElement | null = null;
let strokes: Stroke[] = [];
let eraserStrokes: Stroke[] = [];
let activeStroke: Stroke | null = null;
let resultVersion = 0;

const root = document.getElementById("app") as HTMLDivElement;

function setState(next: state.UiState): void {
  ui = next;
  render();
}

function banner(text: string): HTMLElement {
  const el = document.createElement("div");
  el.className = "banner";
  el.textContent = text;
  return el;
}

async function refreshGarments(): Promise<void> {
  try {
    garments = await api.listGarments(classFilter || undefined);
    render();
  } catch (err) {
    root.replaceChildren(banner(`could not load garments: ${(err as Error).message} — retrying…`));
    setTimeout(refreshGarments, 2000);
  }
}

function renderGarments(): void {
  const wrap = document.createElement("div");
  wrap.className = "view";
  const heading = document.createElement("h1");
  heading.textContent = "Garments";
  wrap.append(heading);

  const filter = document.createElement("select");
  const classes = ["", ...new Set(garments.map((g) => g.garment_class))].sort();
  for (const cls of classes) {
    const opt = document.createElement("option");
    opt.value = cls;
    opt.textContent = cls === "" ? "all types" : cls;
    opt.selected = cls === classFilter;
    filter.append(opt);
  }
  filter.onchange = () => {
    classFilter = filter.value;
    void refreshGarments();
  };
  wrap.append(filter);

  const grid = document.createElement("div");
  grid.className = "grid";
  if (garments.length === 0) {
    grid.append(banner("no garments in the catalog yet"));
  }
  for (const garment of garments) {
    const card = document.createElement("button");
    card.className = "card";
    card.dataset.garmentId = garment.garment_id;
    card.innerHTML = `<strong>${garment.display_name}</strong><br>${garment.garment_class} · ${Math.round(garment.size_bytes / 1024)} KiB<br><em>${garment.downloaded ? "ready" : "tap to download"}</em>`;
    card.onclick = async () => {
      card.disabled = true;
      try {
        if (!garment.downloaded) {
          card.innerHTML += "<br>downloading…";
          await api.download(garment.garment_id);
          garment.downloaded = true;
        }
        setState(state.selectGarment(ui, garment.garment_id));
      } catch (err) {
        card.disabled = false;
        alert(`download failed: ${(err as Error).message}`);
      }
    };
    grid.append(card);
  }
  wrap.append(grid);
  root.replaceChildren(wrap);
}

function drawOverlay(canvas: HTMLCanvasElement, current: Stroke[], color: string): void {
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (photo) {
    ctx.drawImage(photo, 0, 0, canvas.width, canvas.height);
  }
  if (current.length === 0) return;
  const mask = strokesToMask(current, canvas.width, canvas.height);
  const overlay = ctx.getImageData(0, 0, canvas.width, canvas.height);
  const [r, g, b] = color === "red" ? [220, 40, 40] : [40, 120, 220];
  for (let i = 0; i < mask.length; i++) {
    if (mask[i]) {
      overlay.data[i * 4] = (overlay.data[i * 4] + r * 2) / 3;
      overlay.data[i * 4 + 1] = (overlay.data[i * 4 + 1] + g * 2) / 3;
      overlay.data[i * 4 + 2] = (overlay.data[i * 4 + 2] + b * 2) / 3;
    }
  }
  ctx.putImageData(overlay, 0, 0);
}

function attachDrawing(canvas: HTMLCanvasElement, target: Stroke[], color: string): void {
  const position = (ev: PointerEvent) =>
    eventToImageCoords(ev.clientX, ev.clientY, canvas.getBoundingClientRect(), canvas.width, canvas.height);
  canvas.onpointerdown = (ev) => {
    canvas.setPointerCapture(ev.pointerId);
    activeStroke = { points: [position(ev)], radius: ui.brush.radius };
    target.push(activeStroke);
    drawOverlay(canvas, target, color);
  };
  canvas.onpointermove = (ev) => {
    if (!activeStroke) return;
    activeStroke.points.push(position(ev));
    drawOverlay(canvas, target, color);
  };
  const finish = () => {
    activeStroke = null;
  };
  canvas.onpointerup = finish;
  canvas.onpointercancel = finish;
}

function brushControls(): HTMLElement {
  const label = document.createElement("label");
  label.className = "brush";
  label.textContent = `brush ${ui.brush.radius}px `;
  const slider = document.createElement("input");
  slider.type = "range";
  slider.min = "2";
  slider.max = "64";
  slider.value = String(ui.brush.radius);
  slider.oninput = () => {
    ui = state.setBrush(ui, Number(slider.value), ui.brush.mode);
    label.firstChild!.textContent = `brush ${ui.brush.radius}px `;
  };
  label.append(slider);
  return label;
}

function renderPersonalize(): void {
  const wrap = document.createElement("div");
  wrap.className = "view";
  const heading = document.createElement("h1");
  heading.textContent = "Personalize";
  wrap.append(heading);

  const picker = document.createElement("input");
  picker.type = "file";
  picker.accept = "image/png";
  picker.onchange = async () => {
    const file = picker.files?.[0];
    if (!file) return;
    const bytes = new Uint8Array(await file.arrayBuffer());
    try {
      const sessionId = await api.createSession(bytes);
      photo = new Image();
      photo.src = URL.createObjectURL(new Blob([bytes], { type: "image/png" }));
      await photo.decode();
      imageWidth = photo.naturalWidth;
      imageHeight = photo.naturalHeight;
      strokes = [];
      setState(state.sessionCreated(ui, sessionId));
    } catch (err) {
      alert(`upload failed: ${(err as Error).message}`);
    }
  };
  wrap.append(picker);

  if (ui.session && photo) {
    const canvas = document.createElement("canvas");
    canvas.width = imageWidth;
    canvas.height = imageHeight;
    canvas.className = "paint";
    attachDrawing(canvas, strokes, "red");
    wrap.append(canvas);
    queueMicrotask(() => drawOverlay(canvas, strokes, "red"));

    wrap.append(brushControls());

    const clear = document.createElement("button");
    clear.textContent = "clear mask";
    clear.onclick = () => {
      strokes = [];
      drawOverlay(canvas, strokes, "red");
    };
    wrap.append(clear);

    const generate = document.createElement("button");
    generate.className = "primary";
    generate.textContent = ui.pending ? "generating…" : "Generate";
    generate.disabled = !state.canGenerate(ui);
    generate.onclick = async () => {
      if (!state.canGenerate(ui)) return;
      setState(state.beginGenerate(ui));
      try {
        const mask = strokesToMask(strokes, imageWidth, imageHeight);
        await api.submitMask(ui.session!, encodeGrayPng(imageWidth, imageHeight, mask));
        await api.generate(ui.session!, ui.selectedGarment!, { seed: Date.now() % 2 ** 32 });
        resultVersion++;
        eraserStrokes = [];
        setState(state.generateSucceeded(ui));
      } catch (err) {
        setState(state.generateFailed(ui));
        const failure = err as ApiError;
        alert(`generate failed (${failure.code ?? "error"}): ${failure.message}`);
      }
    };
    wrap.append(generate);
  } else {
    wrap.append(banner("choose a photo to start drawing"));
  }

  const back = document.createElement("button");
  back.textContent = "back to garments";
  back.onclick = () => setState(state.showView(ui, "garments"));
  wrap.append(back);
  root.replaceChildren(wrap);
}

function renderResult(): void {
  const wrap = document.createElement("div");
  wrap.className = "view";
  const heading = document.createElement("h1");
  heading.textContent = "Result";
  wrap.append(heading);

  const canvas = document.createElement("canvas");
  canvas.width = imageWidth;
  canvas.height = imageHeight;
  canvas.className = "paint";
  wrap.append(canvas);

  const result = new Image();
  result.src = `${api.resultUrl(ui.session!)}?v=${resultVersion}`;
  result.onload = () => {
    photo = result;
    drawOverlay(canvas, eraserStrokes, "blue");
  };
  attachDrawing(canvas, eraserStrokes, "blue");

  wrap.append(brushControls());

  const applyErase = document.createElement("button");
  applyErase.className = "primary";
  applyErase.textContent = "erase (restore original)";
  applyErase.onclick = async () => {
    try {
      const mask = strokesToMask(eraserStrokes, imageWidth, imageHeight);
      await api.erase(ui.session!, encodeGrayPng(imageWidth, imageHeight, mask));
      eraserStrokes = [];
      resultVersion++;
      render();
    } catch (err) {
      alert(`erase failed: ${(err as Error).message}`);
    }
  };
  wrap.append(applyErase);

  const again = document.createElement("button");
  again.textContent = "back to drawing";
  again.onclick = () => setState(state.showView(ui, "personalize"));
  const home = document.createElement("button");
  home.textContent = "garments";
  home.onclick = () => setState(state.showView(ui, "garments"));
  wrap.append(again, home);
  root.replaceChildren(wrap);
}

function render(): void {
  if (ui.view === "garments") {
    renderGarments();
  } else if (ui.view === "personalize") {
    renderPersonalize();
  } else {
    renderResult();
  }
}

render();
void refreshGarments();
