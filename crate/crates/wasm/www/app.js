// Single-page driver for the vortexpin wasm demo. No framework: sliders fire
// solves, canvases render heatmaps and curves.

import init, { solve_obstacle_demo, radial_demo, sweep_demo } from "./pkg/vortexpin_wasm.js";

const $ = (id) => document.getElementById(id);

// ---- small plotting helpers -------------------------------------------------

function clearCanvas(ctx) {
  ctx.fillStyle = "#0e1013";
  ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
}

// viridis-ish ramp, good enough for a demo heatmap
function colormap(t) {
  const stops = [
    [68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37],
  ];
  const x = Math.min(Math.max(t, 0), 1) * (stops.length - 1);
  const i = Math.min(Math.floor(x), stops.length - 2);
  const f = x - i;
  return stops[i].map((c, k) => Math.round(c + f * (stops[i + 1][k] - c)));
}

function drawHeatmap(canvas, values, nx, paint) {
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(nx, nx);
  for (let j = 0; j < nx; j++) {
    for (let i = 0; i < nx; i++) {
      // flip y so the first row lands at the bottom
      const src = (nx - 1 - j) * nx + i;
      const dst = 4 * (j * nx + i);
      const [r, g, b, a] = paint(values[src]);
      img.data[dst] = r;
      img.data[dst + 1] = g;
      img.data[dst + 2] = b;
      img.data[dst + 3] = a;
    }
  }
  // scale the nx×nx image up to the canvas
  const off = new OffscreenCanvas(nx, nx);
  off.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  clearCanvas(ctx);
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
}

function drawCurves(canvas, xs, seriesList, labels, colors, extra = {}) {
  const ctx = canvas.getContext("2d");
  clearCanvas(ctx);
  const W = canvas.width, H = canvas.height, m = 36;
  const finite = (v) => Number.isFinite(v);
  let ymin = Infinity, ymax = -Infinity;
  for (const s of seriesList) for (const v of s) if (finite(v)) { ymin = Math.min(ymin, v); ymax = Math.max(ymax, v); }
  if (!(ymax > ymin)) { ymax = ymin + 1; }
  const pad = 0.06 * (ymax - ymin);
  ymin -= pad; ymax += pad;
  const xmin = xs[0], xmax = xs[xs.length - 1];
  const X = (x) => m + (x - xmin) / (xmax - xmin) * (W - 2 * m);
  const Y = (y) => H - m - (y - ymin) / (ymax - ymin) * (H - 2 * m);

  ctx.strokeStyle = "#2a2e35";
  ctx.strokeRect(m, m, W - 2 * m, H - 2 * m);
  ctx.fillStyle = "#9aa3ad";
  ctx.font = "11px system-ui";
  ctx.fillText(xmin.toFixed(2), m - 8, H - m + 14);
  ctx.fillText(xmax.toFixed(2), W - m - 16, H - m + 14);
  ctx.fillText(ymin.toFixed(3), 2, H - m);
  ctx.fillText(ymax.toFixed(3), 2, m + 4);

  if (extra.vline !== undefined && extra.vline >= xmin && extra.vline <= xmax) {
    ctx.strokeStyle = "#555";
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(X(extra.vline), m);
    ctx.lineTo(X(extra.vline), H - m);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  seriesList.forEach((s, si) => {
    ctx.strokeStyle = colors[si];
    ctx.lineWidth = si === 0 ? 2 : 1.4;
    ctx.beginPath();
    let started = false;
    for (let i = 0; i < xs.length; i++) {
      if (!finite(s[i])) { started = false; continue; }
      const px = X(xs[i]), py = Y(s[i]);
      if (!started) { ctx.moveTo(px, py); started = true; } else { ctx.lineTo(px, py); }
    }
    ctx.stroke();
    ctx.fillStyle = colors[si];
    ctx.fillText(labels[si], W - m - 120, m + 14 + 14 * si);
  });
}

// ---- obstacle panel ---------------------------------------------------------

function renderObstacle() {
  const factor = parseFloat($("ob-lambda").value);
  const R = parseFloat($("ob-r").value);
  const a = Math.pow(10, parseFloat($("ob-a").value));
  $("ob-lambda-out").value = factor.toFixed(2);
  $("ob-r-out").value = R.toFixed(2);
  $("ob-a-out").value = a.toFixed(3);

  const nx = 96;
  let demo;
  try {
    demo = solve_obstacle_demo(R, a, nx, factor);
  } catch (e) {
    $("ob-stats").textContent = `solve failed: ${e}`;
    return;
  }
  const view = $("ob-view").value;
  const canvas = $("ob-canvas");
  if (view === "mask") {
    drawHeatmap(canvas, demo.masks, demo.nx, (v) => {
      if (v === 255) return [14, 16, 19, 255];
      if (v === 1) return [255, 120, 70, 255];   // w¹: inclusion pinning
      if (v === 2) return [80, 170, 255, 255];   // w²: annulus pinning
      return [40, 44, 52, 255];
    });
  } else {
    const vals = view === "h" ? demo.h_star : demo.mu_star;
    let lo = Infinity, hi = -Infinity;
    for (const v of vals) if (Number.isFinite(v)) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
    if (!(hi > lo)) hi = lo + 1;
    drawHeatmap(canvas, vals, demo.nx, (v) => {
      if (!Number.isFinite(v)) return [14, 16, 19, 255];
      const [r, g, b] = colormap((v - lo) / (hi - lo));
      return [r, g, b, 255];
    });
  }
  $("ob-stats").textContent =
    `λ = ${demo.lambda.toFixed(4)}   λ₀ = ${demo.lambda0.toFixed(4)}   λ₁ = ${demo.lambda1.toFixed(4)}   λ₂ = ${demo.lambda2.toFixed(4)}\n` +
    `‖μ★‖ = ${demo.mu_mass.toExponential(3)}   |w¹| = ${demo.w1_cells} cells   |w²| = ${demo.w2_cells} cells`;
}

// ---- radial panel -----------------------------------------------------------

function renderRadial() {
  const R = parseFloat($("ra-r").value);
  const a = Math.pow(10, parseFloat($("ra-a").value));
  $("ra-r-out").value = R.toFixed(2);
  $("ra-a-out").value = a.toFixed(3);
  let demo;
  try {
    demo = radial_demo(R, a, 48, 2048);
  } catch (e) {
    $("ra-stats").textContent = `solve failed: ${e}`;
    return;
  }
  drawCurves(
    $("ra-canvas"),
    demo.rs,
    [demo.shooting, demo.series],
    ["shooting", "series"],
    ["#c7d647", "#80aaff"],
    { vline: R },
  );
  const seriesNote = Number.isFinite(demo.a0)
    ? `a₀ = ${demo.a0.toFixed(6)}   α = ${demo.alpha.toFixed(6)}   β = ${demo.beta.toFixed(6)}   sup|series − shooting| = ${demo.sup_gap.toExponential(2)}`
    : "series diverges for R ≤ 1/2 (outer expansion radius is R) — shooting only";
  const smallA = Number.isFinite(demo.c0)
    ? `\nc₀ = ${demo.c0.toFixed(6)} vs 1 − α⁻¹: pinned-in-annulus regime ${demo.holds ? "holds" : "does not hold"}`
    : "";
  $("ra-stats").textContent =
    `λ₁ = ${demo.lambda1.toFixed(4)}   λ₂ = ${demo.lambda2.toFixed(4)}   ${demo.lambda2 < demo.lambda1 ? "λ₂ < λ₁: annulus nucleates first" : "λ₁ ≤ λ₂: inclusion nucleates first"}\n` +
    seriesNote + smallA;
}

// ---- sweep panel ------------------------------------------------------------

function renderSweep() {
  const R = parseFloat($("sw-r").value);
  const a = Math.pow(10, parseFloat($("sw-a").value));
  $("sw-r-out").value = R.toFixed(2);
  $("sw-a-out").value = a.toFixed(3);
  $("sweep-panel").classList.add("busy");
  // let the busy style paint before the solve blocks the thread
  setTimeout(() => {
    try {
      const demo = sweep_demo(R, a, 64, 0.7, 2.2, 16);
      const xs = Array.from(demo.lambdas, (l) => l / demo.lambda0);
      const w1f = Array.from(demo.w1_cells, (c) => c / demo.s1_cells);
      const w2f = Array.from(demo.w2_cells, (c) => c / demo.s2_cells);
      drawCurves(
        $("sw-canvas"),
        xs,
        [Array.from(demo.mu_mass), w1f, w2f],
        ["‖μ★‖", "|w¹|/|S₁|", "|w²|/|S₂|"],
        ["#c7d647", "#ff7846", "#50aaff"],
        { vline: 1.0 },
      );
      $("sw-stats").textContent =
        `λ₀ = ${demo.lambda0.toFixed(4)}, sweep λ/λ₀ ∈ [0.7, 2.2]; mask nesting violations: ${demo.nesting_violations}`;
    } catch (e) {
      $("sw-stats").textContent = `sweep failed: ${e}`;
    } finally {
      $("sweep-panel").classList.remove("busy");
    }
  }, 20);
}

// ---- wiring -----------------------------------------------------------------

await init();

for (const id of ["ob-lambda", "ob-r", "ob-a"]) $(id).addEventListener("input", renderObstacle);
$("ob-view").addEventListener("change", renderObstacle);
for (const id of ["ra-r", "ra-a"]) $(id).addEventListener("input", renderRadial);
$("sw-run").addEventListener("click", renderSweep);

renderObstacle();
renderRadial();
renderSweep();
