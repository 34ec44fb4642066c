/** Browser entry: wiring between the DOM, the stream, and the renderer. */

import { SessionClient } from "./client";
import { marginColor } from "./colors";
import { Drag, pointerToInput } from "./input";
import { makeCamera } from "./math";
import { SceneRenderer } from "./render";
import { ViewState } from "./view";

const params = new URLSearchParams(location.search);
const host = params.get("host") ?? location.origin;
const modelParam = params.get("model");
const sessionParam = params.get("session");

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const renderer = new SceneRenderer(ctx);
const view = new ViewState();
const client = new SessionClient(host);
const camera = makeCamera(0.6, 0.35);

const banner = document.getElementById("banner")!;
const toasts = document.getElementById("toasts")!;
const readout = document.getElementById("readout")!;
const speedSlider = document.getElementById("speed") as HTMLInputElement;
const speedLabel = document.getElementById("speed-label")!;
const filterToggle = document.getElementById("filter") as HTMLInputElement;
const controls = Array.from(
  document.querySelectorAll<HTMLButtonElement | HTMLInputElement>("[data-control]"),
);

const GAIN = 0.02; // rad/s per pixel

let sessionId: string | null = null;
let drag: Drag = { dx: 0, dy: 0, wheel: 0 };
let dragging = false;
let sendBusy = false;

function toast(message: string): void {
  const el = document.createElement("div");
  el.className = "toast";
  el.textContent = message;
  toasts.appendChild(el);
  setTimeout(() => el.remove(), 4000);
}

function setConnected(on: boolean): void {
  controls.forEach((c) => (c.disabled = !on));
}

function renderFrame(): void {
  const frame = view.frame;
  if (frame === null) return;
  renderer.draw(frame, camera);
  const hs = frame.h
    .map(
      (h, i) =>
        `<span style="color:${marginColor(h, frame.theta[i]!)}">h${i + 1}=${h.toFixed(4)}</span>`,
    )
    .join(" ");
  readout.innerHTML =
    `tick ${frame.tick} &nbsp; t=${frame.t.toFixed(3)} s &nbsp; ${hs}` +
    (frame.feasible ? "" : ' <span class="warn">infeasible</span>');
  banner.classList.toggle("show", view.banner || !frame.feasible);
  banner.textContent = !frame.feasible
    ? "filter infeasible: applying least-violating command"
    : view.banner
      ? "malformed frame received, showing last good state"
      : "";
}

async function pumpInput(): Promise<void> {
  if (sendBusy || sessionId === null) return;
  const pending = view.takePending();
  if (pending === null) return;
  sendBusy = true;
  try {
    const ack = await client.sendInput(
      sessionId,
      pending.u,
      pending.speed_scale,
      pending.filter_on,
    );
    view.recordAck(ack.tick);
  } catch (err) {
    toast(String(err));
  } finally {
    sendBusy = false;
  }
}

function queueFromPointer(): void {
  const u = pointerToInput(drag, GAIN, camera);
  view.queueInput([u[0], u[1], u[2]]);
}

canvas.addEventListener("pointerdown", (e) => {
  dragging = true;
  canvas.setPointerCapture(e.pointerId);
});
canvas.addEventListener("pointerup", () => {
  dragging = false;
  drag = { dx: 0, dy: 0, wheel: 0 };
  view.queueInput([0, 0, 0]);
  void pumpInput();
});
canvas.addEventListener("pointermove", (e) => {
  if (!dragging) return;
  drag = { dx: e.movementX, dy: e.movementY, wheel: 0 };
  queueFromPointer();
});
canvas.addEventListener("wheel", (e) => {
  e.preventDefault();
  drag = { dx: 0, dy: 0, wheel: Math.sign(e.deltaY) };
  queueFromPointer();
});

speedSlider.addEventListener("input", () => {
  speedLabel.textContent = Number(speedSlider.value).toFixed(2);
  view.queueInput(
    view.frame ? (view.frame.u0.slice(0, 3) as [number, number, number]) : [0, 0, 0],
    Number(speedSlider.value),
  );
  void pumpInput();
});
filterToggle.addEventListener("change", () => {
  view.queueInput([0, 0, 0], undefined, filterToggle.checked);
  void pumpInput();
});

for (const action of ["start", "pause", "reset"] as const) {
  document.getElementById(action)!.addEventListener("click", () => {
    if (sessionId === null) return;
    client[action](sessionId).catch((err) => toast(String(err)));
  });
}

function subscribe(id: string): void {
  const ws = new WebSocket(client.streamUrl(id));
  ws.onmessage = (event) => {
    let raw: unknown = null;
    try {
      raw = JSON.parse(event.data as string);
    } catch {
      // fall through with null; ingest flags the banner
    }
    view.ingest(raw);
    renderFrame();
    void pumpInput();
  };
  ws.onclose = () => {
    setConnected(false);
    toast("stream closed");
  };
  ws.onerror = () => toast("stream error");
}

async function connect(): Promise<void> {
  try {
    let id = sessionParam;
    if (id === null) {
      const models = await client.models();
      const model = modelParam ?? models.models[0]?.id;
      if (model === undefined) throw new Error("no models loaded");
      const snap = await client.create(model);
      id = snap.session;
    }
    sessionId = id;
    subscribe(id);
    setConnected(true);
    toast(`session ${id}`);
  } catch (err) {
    setConnected(false);
    toast(String(err));
  }
}

setConnected(false);
void connect();
