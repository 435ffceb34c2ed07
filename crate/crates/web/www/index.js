import init, { szegoProfile, biorthoProfile, gramTable } from "./pkg/qcircle_web.js";

const SAMPLES = 512;
const num = (id) => Number(document.getElementById(id).value);

function inputs() {
  return {
    q: num("q"), n: num("n"), a: num("a"), alpha: num("alpha"),
    b: num("b"), beta: num("beta"), grid: num("grid"),
  };
}

function report(id, text, failed) {
  const el = document.getElementById(id);
  el.textContent = text;
  el.className = failed ? "err" : "";
}

// Draws each series against theta in [0, 2pi], sharing one vertical scale.
function plot(canvas, theta, series) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const values = series.flatMap((s) => s.data).filter(Number.isFinite);
  const lo = Math.min(0, ...values);
  const hi = Math.max(...values) || 1;
  const x = (t) => 30 + (t / (2 * Math.PI)) * (w - 40);
  const y = (v) => h - 20 - ((v - lo) / (hi - lo)) * (h - 40);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(x(0), y(0));
  ctx.lineTo(x(2 * Math.PI), y(0));
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.fillText(hi.toPrecision(4), 2, 14);
  ctx.fillText("0", x(0) - 4, h - 6);
  ctx.fillText("2π", x(2 * Math.PI) - 10, h - 6);
  series.forEach((s, k) => {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    theta.forEach((t, j) => (j ? ctx.lineTo(x(t), y(s.data[j])) : ctx.moveTo(x(t), y(s.data[j]))));
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, w - 160, 16 + 14 * k);
  });
}

function runSzego() {
  const p = inputs();
  try {
    const out = JSON.parse(szegoProfile(p.n, p.q, SAMPLES));
    plot(document.getElementById("szego"), out.theta, [
      { label: "|H_n|² w", data: out.weighted, color: "#c33" },
      { label: "w", data: out.weight, color: "#36c" },
    ]);
    const coeffs = out.coefficients.map((c) => c.toPrecision(6)).join(", ");
    report("szego-out", `coefficients of H_${p.n}: [${coeffs}]\ntotal mass 1/(q;q)_inf = ${out.total_mass}`);
  } catch (e) {
    report("szego-out", String(e), true);
  }
}

function runWeight() {
  const p = inputs();
  try {
    const out = JSON.parse(biorthoProfile(p.n, p.q, p.a, p.alpha, p.b, p.beta, SAMPLES, p.grid));
    plot(document.getElementById("weight"), out.theta, [
      { label: "Re w", data: out.weight_re, color: "#36c" },
      { label: "Im w", data: out.weight_im, color: "#999" },
      { label: "|r_n|", data: out.r_abs, color: "#c33" },
    ]);
    const k = out.kappa;
    report(
      "weight-out",
      `kappa closed     ${k.closed[0]} ${k.closed[1] >= 0 ? "+" : "-"} ${Math.abs(k.closed[1])}i\n` +
        `kappa quadrature ${k.quadrature[0]} ${k.quadrature[1] >= 0 ? "+" : "-"} ${Math.abs(k.quadrature[1])}i\n` +
        `gap ${k.gap.toExponential(3)} on ${p.grid} nodes`,
    );
  } catch (e) {
    report("weight-out", String(e), true);
  }
}

// Cells are shaded by log10 of the residual against the expected table.
function runGram(biortho) {
  const p = inputs();
  const canvas = document.getElementById("gram");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  try {
    const out = JSON.parse(gramTable(biortho, p.n, p.q, p.a, p.alpha, p.b, p.beta, p.grid));
    const size = out.residuals.length;
    const cell = canvas.width / size;
    out.residuals.forEach((row, m) =>
      row.forEach((r, n) => {
        const level = Math.min(1, Math.max(0, (Math.log10(r + 1e-300) + 17) / 13));
        ctx.fillStyle = `hsl(${120 - 120 * level}, 70%, 55%)`;
        ctx.fillRect(n * cell, m * cell, cell - 1, cell - 1);
        const v = out.entries[m][n][0];
        ctx.fillStyle = "#000";
        if (cell > 40) ctx.fillText(Math.abs(v) < 1e-9 ? "0" : v.toPrecision(3), n * cell + 4, m * cell + cell / 2);
      }),
    );
    const r = out.report;
    report("gram-out", `${r.passed ? "PASS" : "FAIL"} ${r.name} residual=${r.residual.toExponential(3)} tol=${r.tolerance}\n${r.notes}`, !r.passed);
  } catch (e) {
    report("gram-out", String(e), true);
  }
}

await init();
document.getElementById("run-szego").onclick = runSzego;
document.getElementById("run-weight").onclick = runWeight;
document.getElementById("run-gram-szego").onclick = () => runGram(false);
document.getElementById("run-gram-biortho").onclick = () => runGram(true);
runSzego();
runWeight();
runGram(false);
