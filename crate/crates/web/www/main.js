// Expects `wasm-bindgen --target web --out-dir www/pkg` output next to this file.
import init, { Demo } from "./pkg/anaconda_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const map = $("map").getContext("2d");
const curve = $("curve").getContext("2d");
const COLORS = { learn: "#1f77b4", greedy: "#d62728" };

let demo = null;
let runs = {};

function status(text) {
  $("status").textContent = text;
}

function drawField(choices) {
  const w = demo.grid_width(), h = demo.grid_height();
  const sx = map.canvas.width / w, sy = map.canvas.height / h;
  map.fillStyle = "#fff";
  map.fillRect(0, 0, map.canvas.width, map.canvas.height);

  if (choices) {
    const mask = demo.coverage_mask(Uint32Array.from(choices, (c) => (c === null ? 0xffffffff : c)));
    map.fillStyle = "#b9e3b0";
    for (let y = 0; y < h; y++)
      for (let x = 0; x < w; x++)
        if (mask[y * w + x]) map.fillRect(x * sx, (h - 1 - y) * sy, sx, sy);
  }

  const pos = demo.positions();
  const edges = demo.edges();
  map.strokeStyle = "rgba(0,0,0,0.12)";
  map.beginPath();
  for (let k = 0; k < edges.length; k += 2) {
    const a = edges[k], b = edges[k + 1];
    map.moveTo(pos[2 * a] * sx, map.canvas.height - pos[2 * a + 1] * sy);
    map.lineTo(pos[2 * b] * sx, map.canvas.height - pos[2 * b + 1] * sy);
  }
  map.stroke();

  map.fillStyle = "#333";
  for (let i = 0; i < pos.length; i += 2) {
    map.beginPath();
    map.arc(pos[i] * sx, map.canvas.height - pos[i + 1] * sy, 2.5, 0, 2 * Math.PI);
    map.fill();
  }
}

function drawCurves() {
  const W = curve.canvas.width, H = curve.canvas.height, pad = 35;
  curve.fillStyle = "#fff";
  curve.fillRect(0, 0, W, H);
  const tmax = Math.max(1, ...Object.values(runs).map((r) => r.seconds.at(-1) ?? 0));
  const px = (t) => pad + (t / tmax) * (W - 2 * pad);
  const py = (c) => H - pad - c * (H - 2 * pad);

  curve.strokeStyle = "#999";
  curve.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  curve.fillStyle = "#555";
  curve.fillText("0", pad - 10, H - pad + 12);
  curve.fillText(`${tmax.toFixed(1)} s`, W - pad - 20, H - pad + 14);
  curve.fillText("1", pad - 12, pad + 4);
  curve.fillText("coverage", pad + 4, pad - 8);

  for (const [name, r] of Object.entries(runs)) {
    curve.strokeStyle = COLORS[name];
    curve.beginPath();
    curve.moveTo(px(0), py(0));
    r.seconds.forEach((t, k) => {
      curve.lineTo(px(t), py(k === 0 ? 0 : r.coverage[k - 1]));
      curve.lineTo(px(t), py(r.coverage[k]));
    });
    curve.stroke();
  }
}

function sample() {
  try {
    demo?.free();
    demo = new Demo(num("seed"), num("agents"), num("rlow"), num("rhigh"));
    runs = {};
    drawField(null);
    drawCurves();
    status(`${demo.edges().length / 2} directed links`);
  } catch (e) {
    status(`error: ${e.message ?? e}`);
  }
}

function run(name) {
  if (!demo) return;
  try {
    const start = performance.now();
    const json = name === "learn"
      ? demo.run_anaconda(num("nmax"), num("tauf"), num("tauc"), num("budget"), num("seed"))
      : demo.run_dfssg(num("tauf"), num("tauc"));
    const r = JSON.parse(json);
    runs[name] = r;
    drawField(r.choices);
    drawCurves();
    const final = r.coverage.at(-1) ?? 0;
    status(`${name}: ${r.rounds} rounds, ${r.seconds.at(-1)?.toFixed(2)} s simulated, ` +
      `final coverage ${(100 * final).toFixed(1)}%, ${(performance.now() - start).toFixed(0)} ms`);
  } catch (e) {
    status(`error: ${e.message ?? e}`);
  }
}

await init();
$("sample").onclick = sample;
$("learn").onclick = () => run("learn");
$("greedy").onclick = () => run("greedy");
sample();
