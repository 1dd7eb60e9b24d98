import init, { knowledgeCurves, excessSweep, guessingGame } from "./pkg/whichway_wasm.js";

const COLORS = { natural: "#1f77b4", canonical: "#d62728", simplified: "#2ca02c", ff: "#9467bd" };
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
let seed = 1;
// Non-finite z-scores arrive as null.
const fixed = (x, d) => (x == null ? "∞" : x.toFixed(d));

function status(msg, isError = false) {
  const el = $("status");
  el.textContent = msg;
  el.className = isError ? "error" : "";
}

function plot(canvas, series, xLabel, yLabel) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const m = { l: 60, r: 130, t: 15, b: 40 };
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.x);
  const ys = series.flatMap((s) => s.y);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 - y0 < 1e-9) { y0 -= 0.5; y1 += 0.5; }
  const pad = 0.05 * (y1 - y0);
  y0 -= pad; y1 += pad;
  const sx = (x) => m.l + ((x - x0) / (x1 - x0)) * (w - m.l - m.r);
  const sy = (y) => h - m.b - ((y - y0) / (y1 - y0)) * (h - m.t - m.b);

  ctx.strokeStyle = "#000";
  ctx.fillStyle = "#000";
  ctx.font = "12px sans-serif";
  ctx.beginPath();
  ctx.moveTo(m.l, m.t);
  ctx.lineTo(m.l, h - m.b);
  ctx.lineTo(w - m.r, h - m.b);
  ctx.stroke();
  for (let i = 0; i <= 5; i++) {
    const xv = x0 + (i / 5) * (x1 - x0);
    const yv = y0 + (i / 5) * (y1 - y0);
    ctx.textAlign = "center";
    ctx.fillText(xv.toFixed(2), sx(xv), h - m.b + 16);
    ctx.textAlign = "right";
    ctx.fillText(yv.toFixed(3), m.l - 6, sy(yv) + 4);
  }
  ctx.textAlign = "center";
  ctx.fillText(xLabel, m.l + (w - m.l - m.r) / 2, h - 6);
  ctx.save();
  ctx.translate(14, m.t + (h - m.t - m.b) / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(yLabel, 0, 0);
  ctx.restore();

  series.forEach((s, i) => {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    s.x.forEach((x, j) => (j ? ctx.lineTo(sx(x), sy(s.y[j])) : ctx.moveTo(sx(x), sy(s.y[j]))));
    ctx.stroke();
    const ly = m.t + 12 + 18 * i;
    ctx.beginPath();
    ctx.moveTo(w - m.r + 12, ly);
    ctx.lineTo(w - m.r + 32, ly);
    ctx.stroke();
    ctx.textAlign = "left";
    ctx.fillText(s.name, w - m.r + 38, ly + 4);
  });
}

function timed(label, f) {
  status(`${label}…`);
  setTimeout(() => {
    const t = performance.now();
    try {
      f();
      status(`${label} done in ${((performance.now() - t) / 1000).toFixed(2)} s`);
    } catch (e) {
      status(String(e), true);
    }
  }, 10);
}

function runCurves() {
  timed("knowledge curves", () => {
    const r = JSON.parse(knowledgeCurves(num("curve-v"), num("curve-points"), num("curve-samples"), seed));
    const series = ["natural", "canonical", "simplified", "ff"].map((k) => ({
      name: k, color: COLORS[k], x: r.delta_rad, y: r[k],
    }));
    plot($("curve-plot"), series, "screen phase δ (rad)", "K(δ)");
  });
}

function runSweep() {
  timed("visibility sweep", () => {
    const r = JSON.parse(excessSweep(num("sweep-points"), 50, num("sweep-samples"), seed));
    const v = r.records.map((x) => x.visibility);
    plot($("sweep-plot"), [
      { name: "fixed bound", color: COLORS.canonical, x: v, y: v.map(() => 1) },
      { name: "simplified", color: COLORS.simplified, x: v, y: r.records.map((x) => x.excess_simplified) },
      { name: "ff", color: COLORS.ff, x: v, y: r.records.map((x) => x.excess_ff) },
    ], "visibility V", "K̄² + V²");
  });
}

function runGame() {
  timed("guessing game", () => {
    const r = JSON.parse(guessingGame(num("game-v"), $("game-basis").value, num("game-shots"), seed++));
    const k = r.knowledge;
    const lines = [
      `knowledge  measured ${k.observed.toFixed(5)} ± ${k.std_error.toFixed(5)}  predicted ${k.expected.toFixed(5)}  z ${fixed(k.z, 2)}`,
      ...r.outcomes.map((o) => {
        const q = o.guess_quality ? o.guess_quality.observed.toFixed(4) : "  –   ";
        return `outcome ${o.index}  p̂ ${o.probability.observed.toFixed(4)} (p ${o.probability.expected.toFixed(4)})  q̂ ${q}`;
      }),
    ];
    $("game-out").textContent = lines.join("\n");
  });
}

await init();
$("curve-run").onclick = runCurves;
$("sweep-run").onclick = runSweep;
$("game-run").onclick = runGame;
runCurves();
