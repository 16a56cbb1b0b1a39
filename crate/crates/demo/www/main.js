import init, { potential_field, convergence, boost_margin } from "./pkg/oig_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function drawField(field) {
  const canvas = $("f-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  // Layer vertices by Hamming weight.
  const layers = new Map();
  for (const v of field.vertices) {
    const w = [...v.bits].filter((b) => b === "1").length;
    if (!layers.has(w)) layers.set(w, []);
    layers.get(w).push(v);
  }
  const pos = new Map();
  const rows = field.dimension + 1;
  for (const [w, vs] of layers) {
    vs.forEach((v, i) => {
      pos.set(v.bits, [((i + 1) * canvas.width) / (vs.length + 1), 20 + (w * (canvas.height - 40)) / Math.max(1, rows - 1)]);
    });
  }
  for (const e of field.edges) {
    const [x0, y0] = pos.get(e.from);
    const [x1, y1] = pos.get(e.to);
    ctx.strokeStyle = `rgba(40, 80, 200, ${0.2 + 0.8 * Math.abs(e.mass_to - 0.5) * 2})`;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
    ctx.stroke();
    // Arrow head at the endpoint receiving more mass.
    const [tx, ty, sx, sy] = e.mass_to >= 0.5 ? [x1, y1, x0, y0] : [x0, y0, x1, y1];
    const a = Math.atan2(ty - sy, tx - sx);
    const hx = tx - 10 * Math.cos(a), hy = ty - 10 * Math.sin(a);
    ctx.beginPath();
    ctx.moveTo(hx, hy);
    ctx.lineTo(hx - 6 * Math.cos(a - 0.5), hy - 6 * Math.sin(a - 0.5));
    ctx.moveTo(hx, hy);
    ctx.lineTo(hx - 6 * Math.cos(a + 0.5), hy - 6 * Math.sin(a + 0.5));
    ctx.stroke();
  }
  for (const v of field.vertices) {
    const [x, y] = pos.get(v.bits);
    const shade = Math.round(255 * (1 - v.potential));
    ctx.fillStyle = `rgb(255, ${shade}, ${shade})`;
    ctx.strokeStyle = "#333";
    ctx.beginPath();
    ctx.arc(x, y, 9, 0, 2 * Math.PI);
    ctx.fill();
    ctx.stroke();
    ctx.fillStyle = "#000";
    ctx.font = "10px monospace";
    ctx.fillText(`${v.bits} ${v.potential.toFixed(3)}`, x + 11, y + 4);
  }
}

function runField() {
  $("f-err").textContent = "";
  try {
    drawField(JSON.parse(potential_field(num("f-m"), num("f-d"), num("f-g"), num("f-l"), BigInt(num("f-s")))));
  } catch (e) {
    $("f-err").textContent = String(e);
  }
}

function runConvergence() {
  try {
    const c = JSON.parse(convergence(num("c-m"), num("c-d"), num("c-g"), BigInt(num("c-s"))));
    const lines = [`start ${c.start}   exact ${c.exact.toFixed(6)}`];
    for (const [u, est] of c.estimates) {
      lines.push(`U = ${String(u).padStart(6)}   estimate ${est.toFixed(6)}   error ${(est - c.exact).toFixed(6)}`);
    }
    $("c-out").textContent = lines.join("\n");
  } catch (e) {
    $("c-out").textContent = String(e);
  }
}

function runBoost() {
  const canvas = $("b-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  try {
    const r = JSON.parse(boost_margin(num("b-n"), num("b-t"), BigInt(num("b-s"))));
    const sx = (x) => 20 + x * (canvas.width - 40);
    for (const [x, y] of r.curve) {
      ctx.fillStyle = y ? "#2a7" : "#c44";
      ctx.fillRect(sx(x) - 4, 20, 8, 30);
    }
    for (const [x, y] of r.sample) {
      ctx.fillStyle = y ? "#2a7" : "#c44";
      ctx.beginPath();
      ctx.arc(sx(x), 100, 4, 0, 2 * Math.PI);
      ctx.fill();
    }
    ctx.strokeStyle = "#000";
    ctx.beginPath();
    ctx.moveTo(sx(r.threshold), 10);
    ctx.lineTo(sx(r.threshold), 140);
    ctx.stroke();
    $("b-out").textContent =
      `rounds ${r.rounds}   training error ${r.train_err.toFixed(3)}   error on support ${r.test_err.toFixed(3)}\n` +
      "top strip: predictions on [0, 1]; dots: training sample; line: target threshold";
  } catch (e) {
    $("b-out").textContent = String(e);
  }
}

await init();
$("f-run").onclick = runField;
$("c-run").onclick = runConvergence;
$("b-run").onclick = runBoost;
runField();
runConvergence();
runBoost();
