import init, { sector_spectrum, counterterm_pair, lhy_series } from "./pkg/polaron_wasm.js";

const num = (form, name) => Number(form.querySelector(`[name=${name}]`).value);

function wire(id, compute) {
  const form = document.getElementById(id);
  const out = form.querySelector("pre");
  form.querySelector("button").addEventListener("click", () => {
    out.textContent = "working...";
    // Let the message paint before the synchronous computation starts.
    setTimeout(() => {
      try {
        const t = performance.now();
        const result = JSON.parse(compute(form));
        out.textContent = JSON.stringify(result, null, 2) + `\n(${(performance.now() - t).toFixed(0)} ms)`;
        if (id === "lhy") plot(form.querySelector("canvas"), result.summand);
      } catch (e) {
        out.textContent = `error: ${e.message ?? e}`;
      }
    }, 10);
  });
}

function plot(canvas, points) {
  const ctx = canvas.getContext("2d");
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => Math.log10(Math.abs(p[1]) + 1e-300));
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  ctx.beginPath();
  points.forEach((_, i) => {
    const x = 30 + ((xs[i] - x0) / (x1 - x0)) * (width - 40);
    const y = height - 20 - ((ys[i] - y0) / (y1 - y0 || 1)) * (height - 40);
    i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.fillText("log10 |summand| vs |p|", 34, 14);
}

await init();

wire("spectrum", (f) => {
  const [px, py, pz] = f.querySelector("[name=p]").value.split(",").map((s) => parseInt(s.trim(), 10) || 0);
  return sector_spectrum(num(f, "a_v"), num(f, "a_w"), num(f, "lambda"), num(f, "n_max"), px, py, pz, num(f, "levels"));
});
wire("counterterms", (f) => counterterm_pair(num(f, "a_v"), num(f, "a_w"), num(f, "lambda"), num(f, "kappa")));
wire("lhy", (f) => lhy_series(num(f, "a_v"), num(f, "cutoff"), num(f, "count")));
