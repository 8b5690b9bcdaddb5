// Demo page logic. No framework: the wasm module returns JSON strings and
// this file renders them with plain DOM and canvas calls.

import init, { solve, surface, selfplay_run } from "./pkg/efplay_wasm.js";

const $ = (id) => document.getElementById(id);

function parsePayload(text) {
  const data = JSON.parse(text);
  if (data.error) throw new Error(data.error);
  return data;
}

function showError(element, err) {
  element.innerHTML = `<p class="error">${String(err).replace(/</g, "&lt;")}</p>`;
}

// ---------------------------------------------------------------- equilibria

function renderEquilibria() {
  const out = $("solve-out");
  try {
    const data = parsePayload(solve());
    const sets = [
      ...data.equilibria[0].user.map((d) => d.info_set),
      ...data.equilibria[0].agent.map((d) => d.info_set),
    ];
    const actionHeaders = [];
    const first = data.equilibria[0];
    for (const dist of [...first.user, ...first.agent]) {
      for (const a of dist.actions) actionHeaders.push(`${shortSet(dist.info_set)}<br>${a.action}`);
    }
    let html = "<table><thead><tr><th>#</th>";
    for (const h of actionHeaders) html += `<th>${h}</th>`;
    html += "<th>expected<br>reward</th></tr></thead><tbody>";
    for (const eq of data.equilibria) {
      html += `<tr${eq.best ? ' class="best"' : ""}><td>${eq.index + 1}</td>`;
      for (const dist of [...eq.user, ...eq.agent]) {
        for (const a of dist.actions) html += `<td>${a.prob}</td>`;
      }
      html += `<td>${eq.expected_reward.frac} = ${eq.expected_reward.decimal}</td></tr>`;
    }
    html += "</tbody></table>";
    out.innerHTML = html;
    void sets;
  } catch (err) {
    showError(out, err);
  }
}

function shortSet(name) {
  return name
    .replace("user_sees_", "user sees ")
    .replace("agent_heard_", "agent heard ");
}

// ------------------------------------------------------------------- surface

const SURFACE = { points: [], resolution: 0 };
const REWARD_MIN = -1.0;
const REWARD_MAX = 1.1;

function rewardColor(v) {
  // Two-sided scale: blue for losses, white near zero, green for gains.
  const t = (v - REWARD_MIN) / (REWARD_MAX - REWARD_MIN);
  const stops = [
    [0.0, [38, 70, 160]],
    [0.48, [235, 240, 248]],
    [1.0, [12, 120, 60]],
  ];
  for (let i = 1; i < stops.length; i++) {
    if (t <= stops[i][0]) {
      const [t0, c0] = stops[i - 1];
      const [t1, c1] = stops[i];
      const u = (t - t0) / (t1 - t0);
      const mix = c0.map((c, k) => Math.round(c + u * (c1[k] - c)));
      return `rgb(${mix[0]},${mix[1]},${mix[2]})`;
    }
  }
  return "rgb(12,120,60)";
}

function renderSurface() {
  const canvas = $("surface-canvas");
  const ctx = canvas.getContext("2d");
  const res = Math.max(2, Math.min(161, Number($("surface-res").value) || 41));
  let data;
  try {
    data = parsePayload(surface(res));
  } catch (err) {
    showError($("surface-readout"), err);
    return;
  }
  SURFACE.points = data.points;
  SURFACE.resolution = data.resolution;

  const n = data.resolution;
  const w = canvas.width;
  const h = canvas.height;
  const cell = Math.min(w, h) / n;
  ctx.clearRect(0, 0, w, h);
  // Points arrive x-major: index = i * n + j with x = i/(n-1), y = j/(n-1).
  for (const [idx, p] of data.points.entries()) {
    const i = Math.floor(idx / n);
    const j = idx % n;
    ctx.fillStyle = rewardColor(p.reward_decimal);
    ctx.fillRect(i * cell, h - (j + 1) * cell, Math.ceil(cell), Math.ceil(cell));
  }
  // Saddle marker at (20/41, 20/41).
  const sx = (20 / 41) * (w - cell) + cell / 2;
  const sy = h - ((20 / 41) * (h - cell) + cell / 2);
  ctx.beginPath();
  ctx.arc(sx, sy, 5, 0, 2 * Math.PI);
  ctx.fillStyle = "#111";
  ctx.fill();
  ctx.strokeStyle = "#fff";
  ctx.lineWidth = 2;
  ctx.stroke();

  renderLegend();
  $("surface-readout").textContent =
    `corners: E(0,0)=1, E(1,1)=11/10, E(1,0)=E(0,1)=-1; saddle E(20/41,20/41)=1/41`;
}

function renderLegend() {
  const canvas = $("surface-legend");
  const ctx = canvas.getContext("2d");
  const w = canvas.width;
  const h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  for (let y = 0; y < h; y++) {
    const v = REWARD_MAX - (y / (h - 1)) * (REWARD_MAX - REWARD_MIN);
    ctx.fillStyle = rewardColor(v);
    ctx.fillRect(6, y, 22, 1);
  }
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  for (const v of [1.1, 1.0, 0.5, 0.0, -0.5, -1.0]) {
    const y = ((REWARD_MAX - v) / (REWARD_MAX - REWARD_MIN)) * (h - 1);
    ctx.fillText(v.toFixed(1), 32, Math.min(h - 2, Math.max(10, y + 4)));
  }
}

function hookSurfaceHover() {
  const canvas = $("surface-canvas");
  canvas.addEventListener("mousemove", (ev) => {
    if (!SURFACE.resolution) return;
    const rect = canvas.getBoundingClientRect();
    const n = SURFACE.resolution;
    const cell = Math.min(canvas.width, canvas.height) / n;
    const i = Math.min(n - 1, Math.max(0, Math.floor((ev.clientX - rect.left) / cell)));
    const j = Math.min(n - 1, Math.max(0, Math.floor((canvas.height - (ev.clientY - rect.top)) / cell)));
    const p = SURFACE.points[i * n + j];
    if (p) {
      $("surface-readout").textContent =
        `x = ${p.x}, y = ${p.y}:  E = ${p.reward} = ${p.reward_decimal}`;
    }
  });
}

// ------------------------------------------------------------------ selfplay

function renderSelfplay() {
  const btn = $("sp-btn");
  const status = $("sp-status");
  btn.disabled = true;
  status.textContent = "training…";
  // Let the browser paint the status before the synchronous wasm call.
  setTimeout(() => {
    try {
      const algo = $("sp-algo").value;
      const seed = BigInt(Math.max(0, Number($("sp-seed").value) || 0));
      const lr = Math.max(1e-6, Number($("sp-lr").value) || 0.005);
      const iters = Math.max(1, Math.min(500, Number($("sp-iters").value) || 90));
      const data = parsePayload(selfplay_run(algo, seed, iters, 300, lr));
      drawCurve(data);
      const conv = data.convergence_episode
        ? `converged at episode ${data.convergence_episode}`
        : "never crossed the 1.095 window threshold";
      $("sp-summary").innerHTML =
        `<p><span class="badge ${data.outcome}">${data.outcome}</span> after ` +
        `${data.episodes} episodes &mdash; ${conv}.</p>` +
        policyTable("user policy (P of message | destination)", data.policies.user) +
        policyTable("agent policy (P of drive | message)", data.policies.agent);
      status.textContent = "";
    } catch (err) {
      showError($("sp-summary"), err);
      status.textContent = "";
    } finally {
      btn.disabled = false;
    }
  }, 20);
}

function softmax(row) {
  const m = Math.max(...row);
  const e = row.map((v) => Math.exp(v - m));
  const s = e.reduce((a, b) => a + b, 0);
  return e.map((v) => v / s);
}

function policyTable(title, logits) {
  const labels = ["Starbucks", "Peet's"];
  let html = `<p style="margin:10px 0 4px;font-size:13px;color:var(--muted)">${title}</p><table>`;
  html += "<tr><th></th><th>…Starbucks</th><th>…Peet's</th></tr>";
  logits.forEach((row, i) => {
    const p = softmax(row);
    html += `<tr><td>${labels[i]}</td><td>${p[0].toFixed(3)}</td><td>${p[1].toFixed(3)}</td></tr>`;
  });
  return html + "</table>";
}

function drawCurve(data) {
  const canvas = $("sp-canvas");
  const ctx = canvas.getContext("2d");
  const w = canvas.width;
  const h = canvas.height;
  const pad = { l: 46, r: 12, t: 10, b: 26 };
  ctx.clearRect(0, 0, w, h);

  const xMax = data.episodes;
  const yMin = -1.05;
  const yMax = 1.15;
  const toX = (ep) => pad.l + (ep / xMax) * (w - pad.l - pad.r);
  const toY = (v) => pad.t + ((yMax - v) / (yMax - yMin)) * (h - pad.t - pad.b);

  // Axes and reference rewards.
  ctx.strokeStyle = "#d8deea";
  ctx.fillStyle = "#68748a";
  ctx.font = "11px sans-serif";
  for (const v of [1.1, 1.0, 0.5, 0.0, -0.5, -1.0]) {
    ctx.beginPath();
    ctx.moveTo(pad.l, toY(v));
    ctx.lineTo(w - pad.r, toY(v));
    ctx.stroke();
    ctx.fillText(v.toFixed(1), 8, toY(v) + 4);
  }
  for (let ep = 0; ep <= xMax; ep += Math.max(3000, Math.round(xMax / 9 / 1000) * 1000)) {
    ctx.fillText(String(ep), toX(ep) - 10, h - 8);
  }

  // Convergence marker.
  if (data.convergence_episode) {
    ctx.strokeStyle = "#0b7a3e";
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(toX(data.convergence_episode), pad.t);
    ctx.lineTo(toX(data.convergence_episode), h - pad.b);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  // The trailing-window mean curve.
  ctx.strokeStyle = "#2458d6";
  ctx.lineWidth = 1.6;
  ctx.beginPath();
  data.curve.forEach(([ep, v], i) => {
    if (i === 0) ctx.moveTo(toX(ep), toY(v));
    else ctx.lineTo(toX(ep), toY(v));
  });
  ctx.stroke();
  ctx.lineWidth = 1;
}

// ---------------------------------------------------------------------- init

async function main() {
  await init();
  $("solve-btn").addEventListener("click", renderEquilibria);
  $("surface-btn").addEventListener("click", renderSurface);
  $("sp-btn").addEventListener("click", renderSelfplay);
  hookSurfaceHover();
  renderEquilibria();
  renderSurface();
}

main().catch((err) => {
  document.querySelector("main").insertAdjacentHTML(
    "afterbegin",
    `<section><p class="error">Failed to load the wasm module: ${err}.<br>
     Build it first — see the README (<code>wasm-pack build crates/efplay-wasm --target web --out-dir ../../www/pkg</code>).</p></section>`
  );
});
