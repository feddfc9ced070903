import init, { solve, convergence, stability } from "./pkg/disloc_wasm.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

// Draws series [{x, y, color, dash, label}] with linear or log10 axes.
function plot(canvas, series, { logX = false, logY = false, vlines = [] } = {}) {
  const dpr = window.devicePixelRatio || 1;
  const w = canvas.clientWidth, h = canvas.clientHeight;
  canvas.width = w * dpr;
  canvas.height = h * dpr;
  const ctx = canvas.getContext("2d");
  ctx.scale(dpr, dpr);
  ctx.clearRect(0, 0, w, h);

  const fx = logX ? Math.log10 : (v) => v;
  const fy = logY ? Math.log10 : (v) => v;
  const pts = series.map((s) =>
    s.x.map((x, i) => [fx(x), fy(s.y[i])]).filter(([a, b]) => Number.isFinite(a) && Number.isFinite(b)));
  const all = pts.flat();
  if (all.length === 0) return;
  let [x0, x1] = [Math.min(...all.map((p) => p[0])), Math.max(...all.map((p) => p[0]))];
  let [y0, y1] = [Math.min(...all.map((p) => p[1])), Math.max(...all.map((p) => p[1]))];
  if (x1 === x0) x1 = x0 + 1;
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  const pad = 0.05 * (y1 - y0);
  y0 -= pad; y1 += pad;

  const m = { l: 64, r: 12, t: 10, b: 28 };
  const sx = (v) => m.l + ((v - x0) / (x1 - x0)) * (w - m.l - m.r);
  const sy = (v) => h - m.b - ((v - y0) / (y1 - y0)) * (h - m.t - m.b);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(m.l, m.t, w - m.l - m.r, h - m.t - m.b);
  ctx.fillStyle = "#555";
  ctx.font = "11px system-ui";
  const label = (v, log) => (log ? `1e${v.toFixed(0)}` : Math.abs(v) >= 1e4 || (v !== 0 && Math.abs(v) < 1e-2) ? v.toExponential(1) : v.toPrecision(3));
  for (let i = 0; i <= 4; i++) {
    const yv = y0 + ((y1 - y0) * i) / 4;
    ctx.fillText(label(yv, logY), 4, sy(yv) + 4);
    const xv = x0 + ((x1 - x0) * i) / 4;
    ctx.fillText(label(xv, logX), sx(xv) - 12, h - 10);
  }

  ctx.setLineDash([2, 4]);
  ctx.strokeStyle = "#bbb";
  for (const v of vlines) {
    if (v <= x0 || v >= x1) continue;
    ctx.beginPath();
    ctx.moveTo(sx(v), m.t);
    ctx.lineTo(sx(v), h - m.b);
    ctx.stroke();
  }

  series.forEach((s, k) => {
    ctx.setLineDash(s.dash || []);
    ctx.strokeStyle = s.color || COLORS[k % COLORS.length];
    ctx.lineWidth = s.width || 1.5;
    ctx.beginPath();
    pts[k].forEach(([a, b], i) => (i ? ctx.lineTo(sx(a), sy(b)) : ctx.moveTo(sx(a), sy(b))));
    ctx.stroke();
    if (s.marks) pts[k].forEach(([a, b]) => ctx.fillRect(sx(a) - 2, sy(b) - 2, 4, 4));
  });
  ctx.setLineDash([]);
  let lx = m.l + 8;
  series.forEach((s, k) => {
    if (!s.label) return;
    ctx.fillStyle = s.color || COLORS[k % COLORS.length];
    ctx.fillText(s.label, lx, m.t + 14);
    lx += ctx.measureText(s.label).width + 16;
  });
}

function table(rows, head) {
  const esc = (v) => String(v).replace(/&/g, "&amp;").replace(/</g, "&lt;");
  return `<table><tr>${head.map((h) => `<th>${esc(h)}</th>`).join("")}</tr>${rows
    .map((r) => `<tr>${r.map((c) => `<td>${esc(c)}</td>`).join("")}</tr>`)
    .join("")}</table>`;
}

function values(form) {
  const out = {};
  for (const el of form.elements) {
    if (!el.name) continue;
    out[el.name] = el.type === "checkbox" ? el.checked : el.type === "number" || (el.tagName === "SELECT" && /^\d/.test(el.value)) ? Number(el.value) : el.value;
  }
  return out;
}

function run(status, f) {
  status.classList.remove("error");
  status.textContent = "running…";
  // let the status paint before the solver blocks the thread
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const msg = f();
      status.textContent = `${msg}  (${(performance.now() - t0).toFixed(0)} ms)`;
    } catch (e) {
      status.classList.add("error");
      status.textContent = e.message || String(e);
    }
  }, 10);
}

const fmt = (v, d = 4) => (v === null || v === undefined ? "–" : Number(v).toExponential(d));

function onSolve(ev) {
  ev?.preventDefault();
  const v = values(document.getElementById("solve-form"));
  run(document.getElementById("solve-status"), () => {
    const r = JSON.parse(solve(v.a1, v.a2, v.a3, v.a8, v.rho0, v.rho_cr, v.method, v.n, v.intervals));
    const series = [{ x: r.t, y: r.rho, label: `${r.method}` }];
    if (r.analytic.length) {
      series.push({ x: r.t.slice(0, r.analytic.length), y: r.analytic, color: "#000", dash: [5, 4], width: 1, label: "semi-analytic" });
    }
    series.push({ x: [r.t[0], r.t[r.t.length - 1]], y: [r.saturation, r.saturation], color: "#aaa", dash: [1, 3], width: 1, label: "A₁/A₂" });
    const joints = Array.from({ length: v.intervals }, (_, i) => (i + 1) * r.t_cr);
    plot(document.getElementById("solve-plot"), series, { vlines: joints });
    const flags = Object.entries(r.flags).filter(([, on]) => on).map(([k]) => k).join(", ") || "none";
    return `τ = ${fmt(r.t_cr, 6)}   max error vs semi-analytic = ${fmt(r.error, 3)}   flags: ${flags}`;
  });
}

function onConvergence(ev) {
  ev?.preventDefault();
  const v = values(document.getElementById("conv-form"));
  const methods = ["euler", "beuler", "rk4"].filter((m) => v[m]).join(",");
  run(document.getElementById("conv-status"), () => {
    const r = JSON.parse(convergence(v.case, methods, v.tail));
    const byMethod = new Map();
    for (const row of r.rows) {
      if (!byMethod.has(row.method)) byMethod.set(row.method, []);
      byMethod.get(row.method).push(row);
    }
    const series = [...byMethod].map(([m, rows]) => ({ x: rows.map((q) => q.steps), y: rows.map((q) => q.error), label: m, marks: true }));
    plot(document.getElementById("conv-plot"), series, { logX: true, logY: true });
    document.getElementById("conv-table").innerHTML = table(
      r.rows.map((q) => [q.method, q.steps, fmt(q.error), fmt(q.tail_error, 2), q.order === null ? "" : q.order.toFixed(3)]),
      ["method", "N", "error", "tail error", "order"],
    );
    return `case (${r.case})   window [0, ${r.window.toFixed(4)}]   horizon ${r.horizon.toFixed(4)}   reference bound ${fmt(r.reference_error, 1)}`;
  });
}

function onStability(ev) {
  ev?.preventDefault();
  const v = values(document.getElementById("stab-form"));
  run(document.getElementById("stab-status"), () => {
    const r = JSON.parse(stability(v.a1, v.a2, v.rho_cr, v.a3_min, v.a3_max, v.count, v.n, v.intervals));
    const last = r.entries[r.entries.length - 1];
    plot(document.getElementById("stab-plot"), [
      { x: r.t, y: r.rho, label: `RK4, A₃ = ${last.a3}` },
      { x: [r.t[0], r.t[r.t.length - 1]], y: [last.steady, last.steady], color: "#aaa", dash: [1, 3], width: 1, label: "ρ*" },
    ]);
    document.getElementById("stab-table").innerHTML = table(
      r.entries.map((e) => [e.a3.toFixed(3), e.ratio.toFixed(3), e.class, e.sign_changes, e.growth === null ? "–" : e.growth.toFixed(3), fmt(e.min, 3), fmt(e.max, 3)]),
      ["A₃", "A₃/A₂", "class", "sign changes", "growth", "min", "max"],
    );
    return `${r.entries.filter((e) => e.class === "growing-oscillatory").length} of ${r.entries.length} values grow`;
  });
}

await init();
document.getElementById("solve-form").addEventListener("submit", onSolve);
document.getElementById("conv-form").addEventListener("submit", onConvergence);
document.getElementById("stab-form").addEventListener("submit", onStability);
onSolve();
