import init, { DemoScenario, solve, epsilon_sweep } from "./pkg/nfsec_wasm.js";

const $ = (id) => document.getElementById(id);
const GRID = 60;
const CELL = 100;

function scenario() {
  return new DemoScenario(
    Number($("seed").value) >>> 0,
    Number($("nx").value),
    Number($("users").value),
    Number($("power").value),
  );
}

function design() {
  return [$("scheme").value, $("mode").value, Number($("eps").value)];
}

function status(text) {
  $("status").textContent = text;
}

// Runs `work` after the status line has been painted.
function busy(label, work) {
  status(label + "…");
  setTimeout(() => {
    const t = performance.now();
    try {
      work();
      status(`${label} done in ${((performance.now() - t) / 1000).toFixed(2)} s`);
    } catch (e) {
      status(`${label} failed: ${e.message ?? e}`);
    }
  }, 20);
}

function color(t) {
  const stops = [[0, [13, 8, 89]], [0.3, [26, 115, 217]], [0.55, [51, 204, 178]], [0.8, [242, 217, 51]], [1, [217, 25, 26]]];
  t = Math.min(1, Math.max(0, t));
  for (let i = 1; i < stops.length; i++) {
    if (t <= stops[i][0]) {
      const [t0, c0] = stops[i - 1];
      const [t1, c1] = stops[i];
      const u = (t - t0) / (t1 - t0);
      return c0.map((c, k) => Math.round(c + u * (c1[k] - c)));
    }
  }
  return stops[stops.length - 1][1];
}

function markers(ctx, w, h, xy, fill) {
  ctx.fillStyle = fill;
  ctx.strokeStyle = "white";
  for (let i = 0; i < xy.length; i += 2) {
    ctx.beginPath();
    ctx.arc((xy[i] / CELL) * w, h - (xy[i + 1] / CELL) * h, 5, 0, 2 * Math.PI);
    ctx.fill();
    ctx.stroke();
  }
}

function heatmap(canvas, values, summary) {
  const ctx = canvas.getContext("2d");
  const top = Math.max(...values);
  const img = ctx.createImageData(GRID, GRID);
  for (let iy = 0; iy < GRID; iy++) {
    for (let ix = 0; ix < GRID; ix++) {
      const v = values[iy * GRID + ix];
      const [r, g, b] = color(1 - (top - v) / 60);
      // row 0 is at small y and belongs at the bottom of the canvas
      const o = ((GRID - 1 - iy) * GRID + ix) * 4;
      img.data.set([r, g, b, 255], o);
    }
  }
  const off = new OffscreenCanvas(GRID, GRID);
  off.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
  if (summary) {
    markers(ctx, canvas.width, canvas.height, summary.lue_xy, "#1f77b4");
    markers(ctx, canvas.width, canvas.height, summary.eue_xy, "#d62728");
  }
}

function describe(s) {
  $("summary").textContent =
    `min secrecy rate  ${s.min_sr_bits.toFixed(4)} bit/s/Hz\n` +
    `epsilon           ${s.epsilon.toFixed(4)}\n` +
    `outer iterations  ${s.iterations} (converged: ${s.converged})\n` +
    `bottleneck pair   EUE ${s.bottleneck_eue} / LUE ${s.bottleneck_lue}`;
}

function curve(canvas, eps, vals) {
  const ctx = canvas.getContext("2d");
  const [w, h, m] = [canvas.width, canvas.height, 40];
  ctx.clearRect(0, 0, w, h);
  const top = Math.max(1e-9, ...vals) * 1.1;
  const sx = (e) => m + ((e - eps[0]) / (eps[eps.length - 1] - eps[0])) * (w - 2 * m);
  const sy = (v) => h - m - (v / top) * (h - 2 * m);
  ctx.strokeStyle = "black";
  ctx.strokeRect(m, m, w - 2 * m, h - 2 * m);
  ctx.fillStyle = "black";
  ctx.font = "11px sans-serif";
  ctx.fillText("ε", w / 2, h - 8);
  ctx.fillText(top.toFixed(2), 4, m + 4);
  ctx.fillText("0", 20, h - m);
  eps.forEach((e, i) => i % 3 === 0 && ctx.fillText(e.toFixed(1), sx(e) - 8, h - m + 14));
  ctx.strokeStyle = "#d62728";
  ctx.lineWidth = 2;
  ctx.beginPath();
  vals.forEach((v, i) => (i ? ctx.lineTo(sx(eps[i]), sy(v)) : ctx.moveTo(sx(eps[i]), sy(v))));
  ctx.stroke();
  const best = vals.indexOf(Math.max(...vals));
  ctx.fillStyle = "#d62728";
  ctx.fillText(`best ε = ${eps[best].toFixed(2)}`, m + 6, m + 14);
}

await init();
status("ready");

$("solve").onclick = () =>
  busy("solve", () => describe(solve(scenario(), ...design(), 0)));

$("pattern").onclick = () =>
  busy("beam pattern", () => {
    const summary = solve(scenario(), ...design(), GRID);
    describe(summary);
    const both = summary.pattern_dbm;
    heatmap($("signal"), both.subarray(0, GRID * GRID), summary);
    heatmap($("an"), both.subarray(GRID * GRID), summary);
  });

$("sweep").onclick = () =>
  busy("ε sweep", () => {
    const eps = Array.from({ length: 19 }, (_, i) => 0.05 * (i + 2));
    curve($("curve"), eps, epsilon_sweep(scenario(), new Float64Array(eps)));
  });
