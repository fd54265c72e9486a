import init, { fairness_explorer, foir_inspector, occlusion_preview } from "./pkg/occfair_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function draw(canvas, frame) {
  canvas.width = frame.width;
  canvas.height = frame.height;
  const pixels = new Uint8ClampedArray(frame.rgba());
  canvas.getContext("2d").putImageData(new ImageData(pixels, frame.width, frame.height), 0, 0);
  const info = frame.info();
  frame.free();
  return JSON.parse(info);
}

const fmt = (v, digits = 3) => (v === null || v === undefined ? "undefined" : v.toFixed(digits));

function renderFairness() {
  $("severity-v").textContent = $("severity").value;
  $("alpha-v").textContent = $("alpha").value;
  const r = JSON.parse(fairness_explorer(num("severity"), num("alpha"), num("fair-seed")));
  const groups = r.baseline
    .map((g, i) => {
      const o = r.occluded[i];
      return `<tr><th>${g.group}</th><td>${g.accuracy.toFixed(1)}</td><td>${o.accuracy.toFixed(1)}</td>` +
        `<td>${fmt(g.fmr)}</td><td>${fmt(o.fmr)}</td><td>${fmt(g.fnmr)}</td><td>${fmt(o.fnmr)}</td></tr>`;
    })
    .join("");
  const metrics = r.metrics
    .map((m) => {
      const cls = m.direction ? m.direction.toLowerCase() : "";
      const pct = m.percent_change === null ? "" : `${m.percent_change > 0 ? "+" : ""}${m.percent_change.toFixed(0)}%`;
      return `<tr><th>${m.metric}</th><td>${fmt(m.baseline)}</td><td>${fmt(m.occluded)}</td><td class="${cls}">${pct}</td></tr>`;
    })
    .join("");
  $("fairness").innerHTML =
    `<p>threshold ${r.threshold.toFixed(4)}</p>` +
    `<table><tr><th>group</th><th>acc base</th><th>acc occ</th><th>FMR base</th><th>FMR occ</th><th>FNMR base</th><th>FNMR occ</th></tr>${groups}</table>` +
    `<table><tr><th>metric</th><th>baseline</th><th>occluded</th><th>change</th></tr>${metrics}</table>`;
}

function renderFoir() {
  $("fraction-v").textContent = $("fraction").value;
  $("affinity-v").textContent = $("affinity").value;
  const info = draw($("foir-canvas"), foir_inspector(num("fraction"), num("affinity"), $("fm").checked, num("foir-seed")));
  const ratio = info.foir === null ? "undefined (no important pixels)" : `${(100 * info.foir).toFixed(1)}%`;
  $("foir-info").textContent = `FOIR ${ratio}: ${info.overlapping} of ${info.important_pixels} important pixels occluded`;
}

function renderPreview() {
  const info = draw($("occ-canvas"), occlusion_preview(num("protocol"), num("occ-seed")));
  $("occ-info").textContent = JSON.stringify(info, null, 2);
}

function guarded(render) {
  return () => {
    try {
      render();
    } catch (e) {
      console.error(e);
    }
  };
}

await init();
for (const [ids, render] of [
  [["severity", "alpha", "fair-seed"], renderFairness],
  [["fraction", "affinity", "fm", "foir-seed"], renderFoir],
  [["protocol", "occ-seed"], renderPreview],
]) {
  const run = guarded(render);
  ids.forEach((id) => $(id).addEventListener("input", run));
  run();
}
