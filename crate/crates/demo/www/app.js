import init, { generate, run_scal, run_exact } from "./pkg/scal_demo.js";

const palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const $ = (id) => document.getElementById(id);
const status = $("status");
let points = null;

function settings() {
  return {
    shape: $("shape").value,
    n: Number($("n").value),
    noise: Number($("noise").value),
    dataSeed: BigInt($("dataSeed").value),
    landmarks: Number($("landmarks").value),
    kmeansLandmarks: $("landmarkMethod").value === "kmeans",
    epochs: Number($("epochs").value),
    lr: Number($("lr").value),
    bandwidth: Number($("bandwidth").value),
    seed: BigInt($("seed").value),
  };
}

function bounds(coords, dim) {
  const lo = Array(dim).fill(Infinity);
  const hi = Array(dim).fill(-Infinity);
  for (let i = 0; i < coords.length; i++) {
    const d = i % dim;
    lo[d] = Math.min(lo[d], coords[i]);
    hi[d] = Math.max(hi[d], coords[i]);
  }
  return { lo, hi };
}

function projector(canvas, coords, dim) {
  const { lo, hi } = bounds(coords, dim);
  const pad = 12;
  const span = Math.max(hi[0] - lo[0], hi[1] - lo[1]) || 1;
  const scale = (Math.min(canvas.width, canvas.height) - 2 * pad) / span;
  return (x, y) => [pad + (x - lo[0]) * scale, canvas.height - pad - (y - lo[1]) * scale];
}

function scatter(canvas, coords, dim, colours, extra) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (coords.length === 0) return;
  const all = extra ? Float64Array.from([...coords, ...extra]) : coords;
  const at = projector(canvas, all, dim);
  for (let i = 0; i * dim < coords.length; i++) {
    const [x, y] = at(coords[i * dim], coords[i * dim + 1]);
    ctx.fillStyle = palette[colours[i] % palette.length];
    ctx.fillRect(x - 1.5, y - 1.5, 3, 3);
  }
  if (extra) {
    ctx.strokeStyle = "#000";
    ctx.lineWidth = 1;
    for (let i = 0; i < extra.length; i += 2) {
      const [x, y] = at(extra[i], extra[i + 1]);
      ctx.beginPath();
      ctx.moveTo(x - 3, y - 3); ctx.lineTo(x + 3, y + 3);
      ctx.moveTo(x - 3, y + 3); ctx.lineTo(x + 3, y - 3);
      ctx.stroke();
    }
  }
}

function lossCurve(canvas, loss) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (loss.length === 0) return;
  const logs = Array.from(loss, (v) => Math.log10(Math.max(v, 1e-300)));
  const lo = Math.min(...logs);
  const hi = Math.max(...logs);
  const pad = 24;
  const w = canvas.width - 2 * pad;
  const h = canvas.height - 2 * pad;
  ctx.strokeStyle = "#1f77b4";
  ctx.lineWidth = 2;
  ctx.beginPath();
  logs.forEach((v, i) => {
    const x = pad + (logs.length === 1 ? w / 2 : (i / (logs.length - 1)) * w);
    const y = pad + (hi === lo ? h / 2 : ((hi - v) / (hi - lo)) * h);
    if (i === 0) ctx.moveTo(x, y); else ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.fillText(loss[0].toExponential(2), 2, pad - 8);
  ctx.fillText(loss[loss.length - 1].toExponential(2), canvas.width - 70, canvas.height - 6);
}

function report(text, isError = false) {
  status.textContent = text;
  status.className = isError ? "error" : "";
}

function later(task) {
  report("running…");
  setTimeout(() => {
    try {
      task();
    } catch (e) {
      report(String(e.message ?? e), true);
    }
  }, 20);
}

function doGenerate() {
  const s = settings();
  points = generate(s.shape, s.n, s.noise, s.dataSeed);
  scatter($("data"), points.coords, 2, points.labels);
  scatter($("latent"), new Float64Array(), 2, []);
  lossCurve($("loss"), []);
  report(`${s.n} points, ${points.clusters} classes (coloured by class)`);
}

function show(result, label, started) {
  if (!points) doGenerate();
  scatter($("data"), points.coords, 2, result.assignment, result.landmarks.length ? result.landmarks : null);
  scatter($("latent"), result.latent, Math.max(result.latent_dim, 1), points.labels);
  lossCurve($("loss"), result.loss);
  const ms = (performance.now() - started).toFixed(0);
  report(`${label}: purity ${result.purity.toFixed(3)}, NMI ${result.nmi.toFixed(3)}, σ ${result.sigma.toPrecision(4)}, ${ms} ms`);
}

$("generate").onclick = () => later(doGenerate);
$("scal").onclick = () => later(() => {
  doGenerate();
  const s = settings();
  const t = performance.now();
  const r = run_scal(s.shape, s.n, s.noise, s.dataSeed, s.landmarks, s.kmeansLandmarks, s.epochs, s.lr, s.bandwidth, s.seed);
  show(r, "landmark autoencoder", t);
});
$("exact").onclick = () => later(() => {
  doGenerate();
  const s = settings();
  const t = performance.now();
  const r = run_exact(s.shape, s.n, s.noise, s.dataSeed, s.bandwidth, s.seed);
  show(r, "exact spectral", t);
});

await init();
doGenerate();
