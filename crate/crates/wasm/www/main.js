import init, { field_map, orbit_field, run_estimation } from "./pkg/satmag_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function colour(x) {
  // 0..1 -> blue..red
  const h = 240 * (1 - Math.min(1, Math.max(0, x)));
  return `hsl(${h}, 80%, 50%)`;
}

function drawMap() {
  const canvas = $("map");
  const ctx = canvas.getContext("2d");
  const nLat = 90, nLon = 180;
  let grid;
  try {
    grid = field_map(num("map-date"), num("map-alt"), nLat, nLon);
  } catch (e) {
    $("map-info").textContent = String(e);
    return;
  }
  const lo = Math.min(...grid), hi = Math.max(...grid);
  const cw = canvas.width / nLon, ch = canvas.height / nLat;
  for (let i = 0; i < nLat; i++) {
    for (let j = 0; j < nLon; j++) {
      ctx.fillStyle = colour((grid[i * nLon + j] - lo) / (hi - lo));
      ctx.fillRect(j * cw, i * ch, cw + 1, ch + 1);
    }
  }
  $("map-info").textContent = `  |B| ${lo.toFixed(0)} .. ${hi.toFixed(0)} nT`;
}

function plot(canvas, xs, series, labels) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  const all = series.flat().filter(Number.isFinite);
  let lo = Math.min(...all), hi = Math.max(...all);
  if (hi === lo) { hi += 1; lo -= 1; }
  const x0 = xs[0], x1 = xs[xs.length - 1] || 1;
  const px = (x) => pad + (w - 2 * pad) * (x - x0) / (x1 - x0 || 1);
  const py = (y) => h - pad + (2 * pad - h) * (y - lo) / (hi - lo);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.fillText(hi.toPrecision(3), 2, pad);
  ctx.fillText(lo.toPrecision(3), 2, h - pad);
  ctx.fillText(`${x1.toFixed(0)} s`, w - pad - 30, h - pad + 15);
  const colours = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
  series.forEach((ys, k) => {
    ctx.strokeStyle = colours[k % colours.length];
    ctx.beginPath();
    ys.forEach((y, i) => (i ? ctx.lineTo(px(xs[i]), py(y)) : ctx.moveTo(px(xs[i]), py(y))));
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(labels[k], pad + 8 + 80 * k, pad - 8);
  });
}

function drawOrbit() {
  let s;
  try {
    s = orbit_field(num("orb-alt"), num("orb-inc"), num("orb-dur"), 10);
  } catch (e) {
    alert(e);
    return;
  }
  const cols = [[], [], [], [], []];
  for (let i = 0; i < s.length; i += 5) for (let k = 0; k < 5; k++) cols[k].push(s[i + k]);
  plot($("orbit"), cols[0], cols.slice(1), ["Bx nT", "By nT", "Bz nT", "|B| nT"]);
}

function runEstimation() {
  $("est-info").textContent = "running...";
  setTimeout(() => {
    let r;
    try {
      r = run_estimation($("est-variant").value, num("est-seed"), num("est-dur"), num("est-qm"));
    } catch (e) {
      $("est-info").textContent = String(e);
      return;
    }
    const t = r.t();
    $("est-info").textContent = r.summary();
    plot($("err"), t, [r.err_angle_deg()], ["attitude error deg"]);
    const mt = r.m_true(), me = r.m_est();
    const pick = (a, k) => t.map((_, i) => a[3 * i + k]);
    plot($("rmm"), t, [0, 1, 2].flatMap((k) => [pick(mt, k), pick(me, k)]),
      ["m1 true", "m1 est", "m2 true", "m2 est", "m3 true", "m3 est"]);
    r.free();
  }, 10);
}

await init();
$("map-go").onclick = drawMap;
$("orb-go").onclick = drawOrbit;
$("est-go").onclick = runEstimation;
drawMap();
drawOrbit();
