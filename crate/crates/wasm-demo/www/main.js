import init, { Demo, qualityCurve } from "./pkg/dbs_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
let demo;

function showError(el, err) {
  el.innerHTML = "";
  const span = document.createElement("span");
  span.className = "error";
  span.textContent = String(err.message ?? err);
  el.appendChild(span);
}

function generate(event) {
  event?.preventDefault();
  const request = {
    context: $("gen-context").value,
    keywords: $("gen-keywords").value.split(",").map((w) => w.trim()).filter(Boolean),
    lambda: num("gen-lambda"),
    b: num("gen-b"),
    s: num("gen-s"),
    k: num("gen-k"),
    max_tokens: num("gen-max"),
    seed: num("gen-seed"),
  };
  const out = $("text");
  try {
    const t0 = performance.now();
    const res = JSON.parse(demo.generate(JSON.stringify(request)));
    const ms = performance.now() - t0;
    out.innerHTML = "";
    for (const seg of res.segments) {
      if (seg.keyword === null) {
        out.appendChild(document.createTextNode(seg.text));
      } else {
        const m = document.createElement("mark");
        m.className = `k${seg.keyword % 5}`;
        m.textContent = seg.text;
        out.appendChild(m);
      }
    }
    const reached = res.tokens_to_satisfaction === null
      ? "" : `, all reached after ${res.tokens_to_satisfaction} tokens`;
    $("gen-info").textContent =
      `${res.satisfied}/${request.keywords.length} keywords in order${reached}; ` +
      `cumulative quality ${res.cumulative_q.toFixed(3)}; ${ms.toFixed(0)} ms`;
  } catch (err) {
    showError(out, err);
    $("gen-info").textContent = "";
  }
}

function bar(p, cls) {
  const width = Math.max(1, Math.round(p * 200));
  return `<span class="bar ${cls}" style="width:${width}px"></span> ${(p * 100).toFixed(1)}%`;
}

function steer() {
  const lambda = num("steer-lambda");
  $("steer-lambda-out").textContent = lambda;
  const table = $("steer-table");
  try {
    const view = JSON.parse(demo.steer($("steer-context").value, $("steer-guide").value.trim(), lambda, 12));
    const mass = view.guide_mass.map((m) => (m * 100).toFixed(1) + "%");
    $("steer-info").textContent = view.guide_found
      ? `Probability of a guide-word token: ${mass[0]} before, ${mass[1]} after steering.`
      : "The guide word has no vector, so it gets no steering.";
    const esc = (s) => s.replace(/[&<>]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;" })[c]);
    table.innerHTML = "<tr><th>token</th><th>cos</th><th>before</th><th>after</th></tr>" +
      view.rows.map((r) =>
        `<tr><td>${esc(r.token)}</td><td>${r.similarity.toFixed(2)}</td>` +
        `<td>${bar(r.before, "before")}</td><td>${bar(r.after, "")}</td></tr>`).join("");
  } catch (err) {
    $("steer-info").textContent = "";
    showError(table, err);
  }
}

function drawCurve() {
  const canvas = $("curve");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  ctx.clearRect(0, 0, w, h);
  let series;
  try {
    series = JSON.parse(qualityCurve(num("curve-alpha"), num("curve-cstar"), num("curve-max"), 200));
  } catch (err) {
    ctx.fillStyle = "#b00";
    ctx.fillText(String(err.message ?? err), pad, h / 2);
    return;
  }
  const maxPP = num("curve-max");
  const maxQ = Math.max(...series.flatMap((s) => s.points.map((p) => p[1])));
  const x = (pp) => pad + (pp / maxPP) * (w - 2 * pad);
  const y = (q) => h - pad - (q / maxQ) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.fillText("perplexity", w / 2 - 20, h - 10);
  ctx.fillText(maxPP.toString(), w - pad - 20, h - pad + 14);
  ctx.fillText(maxQ.toFixed(2), 4, pad + 4);
  const colors = ["#999", "#d0862a", "#3a8f3a", "#4a7bd0"];
  series.forEach((s, i) => {
    ctx.strokeStyle = colors[i];
    ctx.setLineDash(s.occurrences === 0 ? [5, 4] : []);
    ctx.beginPath();
    s.points.forEach(([pp, q], j) => (j ? ctx.lineTo(x(pp), y(q)) : ctx.moveTo(x(pp), y(q))));
    ctx.stroke();
    ctx.fillStyle = colors[i];
    ctx.fillText(`c = ${s.occurrences}`, w - pad - 40, pad + 14 * i);
  });
  ctx.setLineDash([]);
}

await init();
drawCurve();
for (const id of ["curve-alpha", "curve-cstar", "curve-max"]) $(id).addEventListener("input", drawCurve);
const t0 = performance.now();
demo = new Demo();
$("status").textContent = `Model ready: ${demo.vocabSize()} word types, trained in ${(performance.now() - t0).toFixed(0)} ms.`;
$("gen-form").addEventListener("submit", generate);
$("steer-form").addEventListener("input", steer);
$("steer-form").addEventListener("submit", (e) => e.preventDefault());
steer();
generate();
