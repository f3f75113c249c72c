import init, {
  simulate_null_statistics,
  scan_delay,
  compare_tied_sources,
} from "./pkg/telag_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const seed = (id) => BigInt(Math.max(0, Math.floor(num(id))));

// ---- tiny canvas plotting kit ----------------------------------------------

const PAD = { left: 52, right: 16, top: 14, bottom: 34 };

function frame(canvas) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const w = canvas.width - PAD.left - PAD.right;
  const h = canvas.height - PAD.top - PAD.bottom;
  return { ctx, w, h };
}

function scales(f, x0, x1, y0, y1) {
  const sx = (x) => PAD.left + ((x - x0) / (x1 - x0)) * f.w;
  const sy = (y) => PAD.top + f.h - ((y - y0) / (y1 - y0)) * f.h;
  return { sx, sy };
}

function ticks(lo, hi, n = 5) {
  const span = hi - lo;
  const raw = span / n;
  const mag = 10 ** Math.floor(Math.log10(raw));
  const step = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => span / s <= n + 1);
  const out = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step / 1e6; v += step) {
    out.push(Math.abs(v) < step / 1e6 ? 0 : v);
  }
  return out;
}

function axes(f, s, x0, x1, y0, y1, xlabel, ylabel) {
  const { ctx } = f;
  ctx.strokeStyle = "#8a93a1";
  ctx.fillStyle = "#5a6676";
  ctx.lineWidth = 1;
  ctx.font = "11px system-ui, sans-serif";
  ctx.beginPath();
  ctx.moveTo(PAD.left, PAD.top);
  ctx.lineTo(PAD.left, PAD.top + f.h);
  ctx.lineTo(PAD.left + f.w, PAD.top + f.h);
  ctx.stroke();
  ctx.textAlign = "center";
  for (const t of ticks(x0, x1)) {
    const x = s.sx(t);
    ctx.beginPath();
    ctx.moveTo(x, PAD.top + f.h);
    ctx.lineTo(x, PAD.top + f.h + 4);
    ctx.stroke();
    ctx.fillText(fmt(t), x, PAD.top + f.h + 16);
  }
  ctx.textAlign = "right";
  for (const t of ticks(y0, y1, 4)) {
    const y = s.sy(t);
    ctx.beginPath();
    ctx.moveTo(PAD.left - 4, y);
    ctx.lineTo(PAD.left, y);
    ctx.stroke();
    ctx.fillText(fmt(t), PAD.left - 7, y + 4);
  }
  ctx.textAlign = "center";
  ctx.fillText(xlabel, PAD.left + f.w / 2, PAD.top + f.h + 30);
  ctx.save();
  ctx.translate(12, PAD.top + f.h / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylabel, 0, 0);
  ctx.restore();
}

function fmt(v) {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1000) return v.toFixed(0);
  if (a >= 1) return +v.toFixed(2) + "";
  return +v.toFixed(3) + "";
}

function polyline(f, s, xs, ys, color, width = 1.75, dash = []) {
  const { ctx } = f;
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.setLineDash(dash);
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(s.sx(x), s.sy(ys[i])) : ctx.moveTo(s.sx(x), s.sy(ys[i]))));
  ctx.stroke();
  ctx.setLineDash([]);
}

function vline(f, s, x, color, dash = [5, 4]) {
  const { ctx } = f;
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.25;
  ctx.setLineDash(dash);
  ctx.beginPath();
  ctx.moveTo(s.sx(x), PAD.top);
  ctx.lineTo(s.sx(x), PAD.top + f.h);
  ctx.stroke();
  ctx.setLineDash([]);
}

function histogram(values, nBins, lo, hi) {
  const binw = (hi - lo) / nBins;
  const counts = new Array(nBins).fill(0);
  for (const v of values) {
    const i = Math.min(nBins - 1, Math.max(0, Math.floor((v - lo) / binw)));
    counts[i] += 1;
  }
  // normalized to a density so reference curves overlay directly
  return counts.map((c, i) => ({ x0: lo + i * binw, x1: lo + (i + 1) * binw, d: c / (values.length * binw) }));
}

function drawBars(f, s, bars, color) {
  const { ctx } = f;
  ctx.fillStyle = color;
  for (const b of bars) {
    const x = s.sx(b.x0);
    const wpx = s.sx(b.x1) - x;
    const y = s.sy(b.d);
    ctx.fillRect(x + 0.5, y, Math.max(1, wpx - 1), PAD.top + f.h - y);
  }
}

// ---- panel wiring ----------------------------------------------------------

function runPanel(button, readoutId, call, draw) {
  const readout = $(readoutId);
  button.disabled = true;
  readout.classList.remove("error");
  readout.textContent = "running…";
  // let the browser paint the disabled state before the wasm call blocks
  setTimeout(() => {
    try {
      const res = JSON.parse(call());
      if (res.error) {
        readout.classList.add("error");
        readout.textContent = res.error;
      } else {
        readout.textContent = draw(res);
      }
    } catch (e) {
      readout.classList.add("error");
      readout.textContent = String(e);
    } finally {
      button.disabled = false;
    }
  }, 20);
}

function nullPanel() {
  runPanel(
    $("null-run"),
    "null-readout",
    () =>
      simulate_null_statistics(
        num("null-nap"), num("null-na"), num("null-nb"),
        num("null-t"), num("null-reps"), seed("null-seed"),
      ),
    (res) => {
      const canvas = $("null-canvas");
      const f = frame(canvas);
      const hi = Math.max(...res.density_x);
      const bars = histogram(res.stats, 48, 0, hi);
      const ymax = 1.1 * Math.max(...bars.map((b) => b.d), ...res.density_y);
      const s = scales(f, 0, hi, 0, ymax);
      drawBars(f, s, bars, "#b5cdf7");
      polyline(f, s, res.density_x, res.density_y, "#b91c1c");
      vline(f, s, res.mean, "#2563eb");
      axes(f, s, 0, hi, 0, ymax, "scaled statistic 2T·TE", "density");
      return `df ${res.nu}; replicate mean ${res.mean.toFixed(3)} (blue line) vs expected ${res.nu}; red curve = chi-square reference`;
    },
  );
}

function scanPanel() {
  runPanel(
    $("scan-run"),
    "scan-readout",
    () =>
      scan_delay(
        num("scan-rate"), num("scan-dur"), num("scan-delay"),
        num("scan-max"), num("scan-n"), seed("scan-seed"),
      ),
    (res) => {
      const canvas = $("scan-canvas");
      const f = frame(canvas);
      const pts = res.points;
      const xmax = Math.max(...pts.map((p) => p.shift));
      const tes = pts.map((p) => (p.te ?? 0));
      const ymax = 1.15 * Math.max(...tes, 1e-6);
      const s = scales(f, 0, xmax, 0, ymax);
      vline(f, s, num("scan-delay"), "#6b7280");
      if (res.cutoff_shift !== null) vline(f, s, res.cutoff_shift, "#b91c1c", [2, 3]);
      polyline(f, s, pts.map((p) => p.shift), tes, "#9db6e8", 1);
      for (const p of pts) {
        const sig = p.valid && p.p_value !== null && p.p_value < res.threshold;
        f.ctx.fillStyle = sig ? "#2563eb" : "#ffffff";
        f.ctx.strokeStyle = "#2563eb";
        f.ctx.lineWidth = 1.5;
        f.ctx.beginPath();
        f.ctx.arc(s.sx(p.shift), s.sy(p.te ?? 0), 4.5, 0, 2 * Math.PI);
        f.ctx.fill();
        f.ctx.stroke();
      }
      axes(f, s, 0, xmax, 0, ymax, "source shift (s)", "TE (nats)");
      const cut = res.cutoff_shift === null ? "none on this grid" : `${res.cutoff_shift.toFixed(3)} s`;
      return `filled = significant at ${(100 * res.threshold).toFixed(0)}%; grey line = true delay; cutoff ${cut}; ${res.target_events} target / ${res.source_events} source events`;
    },
  );
}

function tiePanel() {
  runPanel(
    $("tie-run"),
    "tie-readout",
    () =>
      compare_tied_sources(
        num("tie-sb"), num("tie-sc"),
        num("tie-t"), num("tie-reps"), seed("tie-seed"),
      ),
    (res) => {
      const canvas = $("tie-canvas");
      const f = frame(canvas);
      const lo = Math.min(-4, ...res.v) - 0.5;
      const hi = Math.max(4, ...res.v) + 0.5;
      const bars = histogram(res.v, 40, lo, hi);
      const gx = [], gy = [];
      for (let i = 0; i <= 160; i++) {
        const x = lo + ((hi - lo) * i) / 160;
        gx.push(x);
        gy.push(Math.exp(-0.5 * x * x) / Math.sqrt(2 * Math.PI));
      }
      const ymax = 1.1 * Math.max(...bars.map((b) => b.d), ...gy);
      const s = scales(f, lo, hi, 0, ymax);
      drawBars(f, s, bars, "#b5cdf7");
      polyline(f, s, gx, gy, "#b91c1c");
      vline(f, s, 0, "#6b7280");
      axes(f, s, lo, hi, 0, ymax, "closeness metric v (positive favors B)", "density");
      const mean = res.v.reduce((a, b) => a + b, 0) / Math.max(1, res.v.length);
      const rej = res.v.filter((v) => Math.abs(v) > 1.959964).length / Math.max(1, res.v.length);
      return `table TE: B ${res.table_te_b.toFixed(4)}, C ${res.table_te_c.toFixed(4)} nats; mean v ${mean.toFixed(3)}; |v| > 1.96 in ${(100 * rej).toFixed(1)}% of ${res.v.length} replicates (5% expected when tied); degenerate ${res.degenerate}`;
    },
  );
}

await init();
$("null-run").addEventListener("click", nullPanel);
$("scan-run").addEventListener("click", scanPanel);
$("tie-run").addEventListener("click", tiePanel);
nullPanel();
