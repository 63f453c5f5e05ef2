// Glue generated by `wasm-bindgen --target web --out-dir www/pkg`.
import init, { example1_curves, geometric_weights, simulate_tp1 } from "./pkg/hdmean_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function plot(canvas, series, bars) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 30;
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.x).concat(bars ? bars.center : []);
  const ys = series.flatMap((s) => s.y).concat(bars ? bars.density : []).filter(Number.isFinite);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const y1 = Math.max(...ys) * 1.05 || 1;
  const px = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (y) => h - pad - (Math.min(y, y1) / y1) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.font = "12px sans-serif";
  ctx.fillText(x0.toFixed(2), pad, h - 10);
  ctx.fillText(x1.toFixed(2), w - pad - 30, h - 10);

  if (bars) {
    ctx.fillStyle = "rgba(70, 110, 200, 0.35)";
    bars.center.forEach((c, i) => {
      const left = px(c - bars.width / 2);
      const right = px(c + bars.width / 2);
      ctx.fillRect(left, py(bars.density[i]), right - left - 1, h - pad - py(bars.density[i]));
    });
  }
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    s.x.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.y[i])) : ctx.moveTo(px(x), py(s.y[i]))));
    ctx.stroke();
  }
}

function show(outId, fn) {
  const out = $(outId);
  out.classList.remove("err");
  try {
    out.textContent = fn();
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e.message ?? e);
  }
}

const fmtLaw = (law) =>
  `b = ${law.b.toFixed(4)}, rho = [${law.rho.slice(0, 6).map((r) => r.toFixed(4)).join(", ")}${law.rho.length > 6 ? ", …" : ""}]`;

function drawPhase() {
  show("phase-out", () => {
    const c = $("phase-inf").checked ? Infinity : num("phase-c");
    const ref = JSON.parse(example1_curves(0, -4, 6, 401));
    const v = JSON.parse(example1_curves(c, -4, 6, 401));
    plot($("phase-plot"), [
      { x: ref.x, y: ref.density, color: "#bbb" },
      { x: v.x, y: v.density, color: "#c33" },
    ]);
    return `${fmtLaw(v.law)}  (grey: N(0,1))`;
  });
}

function drawSim() {
  $("sim-out").textContent = "running…";
  // let the status text paint before the blocking call
  setTimeout(() =>
    show("sim-out", () => {
      const v = JSON.parse(simulate_tp1(num("sim-n"), num("sim-p"), num("sim-c"), num("sim-reps"), 40, num("sim-seed")));
      plot($("sim-plot"), [{ x: v.curve.x, y: v.curve.density, color: "#c33" }], v.bins);
      return `${v.reps} replicates: mean ${v.mean.toFixed(3)}, sd ${v.sd.toFixed(3)}, KS vs limit ${v.ks.toFixed(4)}\nlimit: ${fmtLaw(v.curve.law)}`;
    }), 10);
}

function drawGeo() {
  show("geo-out", () => {
    const v = JSON.parse(geometric_weights(num("geo-tau"), -3, 6, 401));
    plot($("geo-plot"), [
      { x: v.x, y: v.density, color: "#393" },
      { x: v.x, y: v.cdf.map((p) => p * Math.max(...v.density)), color: "#aaa" },
    ]);
    return `${fmtLaw(v.law)}  (grey: distribution function, rescaled)`;
  });
}

await init();
$("phase-go").onclick = drawPhase;
$("sim-go").onclick = drawSim;
$("geo-go").onclick = drawGeo;
drawPhase();
drawGeo();
