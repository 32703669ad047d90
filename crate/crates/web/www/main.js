import init, { Demo, validate_identifier } from "./pkg/hazardchat_web.js";

const $ = (id) => document.getElementById(id);

function cellText(cell) {
  if (cell === null) return "null";
  if (typeof cell === "string") return cell;
  return JSON.stringify(cell);
}

function renderTable(columns, rows) {
  const table = document.createElement("table");
  const head = table.createTHead().insertRow();
  for (const c of columns) {
    const th = document.createElement("th");
    th.textContent = c;
    head.appendChild(th);
  }
  const body = table.createTBody();
  for (const row of rows) {
    const tr = body.insertRow();
    for (const cell of row) tr.insertCell().textContent = cellText(cell);
  }
  return table;
}

await init();
const demo = new Demo();
const summary = JSON.parse(demo.summary());
$("schema").textContent = summary.schema;
const nodes = Object.values(summary.stats.nodes).reduce((a, b) => a + b, 0);
$("status").textContent = `Graph loaded: ${nodes} nodes. Everything runs in this page.`;

$("ask").addEventListener("click", () => {
  const r = JSON.parse(demo.ask($("question").value));
  $("answer").textContent = r.error ? `Error: ${r.error.message}` : r.answer;
  $("answer").className = r.refused ? "refused" : "";
  const panel = $("answer-query");
  panel.hidden = !r.cypher;
  panel.querySelector("pre").textContent = r.cypher ?? "";
  $("answer-rows").replaceChildren(...(r.rows ? [renderTable(r.rows.columns, r.rows.rows)] : []));
  $("trace").textContent = r.trace.map((t) => `${t.step}: ${t.detail}`).join("\n");
});

$("run").addEventListener("click", () => {
  const r = JSON.parse(demo.run_query($("cypher").value));
  const out = $("query-out");
  if (r.ok) {
    const note = document.createElement("p");
    note.textContent = `${r.rows.length} row(s)`;
    out.replaceChildren(note, renderTable(r.columns, r.rows));
  } else {
    const pre = document.createElement("pre");
    pre.className = "refused";
    pre.textContent = `${r.code}: ${r.message}`;
    out.replaceChildren(pre);
  }
});

function checkIdentifier() {
  const r = JSON.parse(validate_identifier($("identifier").value));
  const out = $("identifier-out");
  out.textContent = r.valid ? `Valid ${r.kind} number ${r.canonical}` : `${r.kind}: ${r.message}`;
  out.className = r.valid ? "ok" : "refused";
}
$("identifier").addEventListener("input", checkIdentifier);
checkIdentifier();
