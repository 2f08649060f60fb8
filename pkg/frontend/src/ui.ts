/**
 * DOM rendering for the console.  Stateless: paints the view model into a
 * root element on every change.  Risk strings are inserted verbatim; the
 * chart parses them only to place points.
 */

import type { ConsoleViewModel } from "./viewmodel.js";
import type { DrawInstruction } from "./types.js";

export interface UiHandlers {
  onOpen: (form: {
    contest: string;
    manifest: string;
    subtotals: string;
    cvrs: string;
    seed: string;
    method: "alpha" | "sprt";
  }) => void;
  onDraw: (count: number) => void;
  onEntry: (ordinal: number, candidate: string | null) => void;
  onRefresh: () => void;
  onDownload: () => void;
  onDismissConflict: () => void;
}

export function render(
  vm: ConsoleViewModel,
  root: HTMLElement,
  handlers: UiHandlers,
): void {
  root.innerHTML = "";
  if (vm.offline) {
    root.appendChild(
      el("div", { class: "banner offline", "data-test": "offline-banner" },
         "Service unreachable. Entry is blocked until the connection returns."),
    );
  }
  if (!vm.snapshot) {
    root.appendChild(setupScreen(handlers));
  } else {
    root.appendChild(dashboard(vm, handlers));
    root.appendChild(drawBoard(vm, handlers));
    root.appendChild(entryPanel(vm, handlers));
    root.appendChild(historyList(vm));
  }
  if (vm.conflict) {
    root.appendChild(conflictPrompt(vm, handlers));
  }
  if (vm.lastError) {
    root.appendChild(
      el("pre", { class: "error", "data-test": "error-box" },
         JSON.stringify(vm.lastError)),
    );
  }
}

function setupScreen(handlers: UiHandlers): HTMLElement {
  const fields: Array<[string, string]> = [
    ["contest", "contest.json"],
    ["manifest", "manifest.csv"],
    ["subtotals", "subtotals.csv"],
    ["cvrs", "cvrs.jsonl"],
  ];
  const section = el("section", { class: "setup", "data-test": "setup" });
  section.appendChild(el("h2", {}, "Start a session"));
  for (const [name, label] of fields) {
    section.appendChild(el("label", {}, label));
    section.appendChild(el("textarea", { "data-test": `file-${name}` }));
  }
  section.appendChild(el("label", {}, "seed"));
  section.appendChild(el("input", { "data-test": "seed" }));
  const method = el("select", { "data-test": "method" });
  method.appendChild(el("option", { value: "alpha" }, "comparison (alpha)"));
  method.appendChild(el("option", { value: "sprt" }, "ballot polling (sprt)"));
  section.appendChild(method);
  const button = el("button", { "data-test": "open" }, "Open session");
  button.addEventListener("click", () => {
    handlers.onOpen({
      contest: textOf(section, "file-contest"),
      manifest: textOf(section, "file-manifest"),
      subtotals: textOf(section, "file-subtotals"),
      cvrs: textOf(section, "file-cvrs"),
      seed: (section.querySelector('[data-test="seed"]') as HTMLInputElement).value,
      method: (method as HTMLSelectElement).value as "alpha" | "sprt",
    });
  });
  section.appendChild(button);
  return section;
}

function dashboard(vm: ConsoleViewModel, handlers: UiHandlers): HTMLElement {
  const snap = vm.snapshot!;
  const section = el("section", { class: "dashboard", "data-test": "dashboard" });
  if (snap.status === "CONFIRMED") {
    section.appendChild(
      el("div", { class: "banner confirmed", "data-test": "confirmed-banner" },
         `Audit complete: every measured risk is at or below ${snap.risk_limit}. ` +
         "The reported outcome stands."),
    );
  } else if (snap.status !== "RUNNING") {
    section.appendChild(
      el("div", { class: "banner escalate", "data-test": "full-count-banner" },
         "Sampling ended without confirmation: proceed to a full hand count."),
    );
  }
  section.appendChild(
    el("p", { "data-test": "session-line" },
       `${snap.contest}: reported winner ${snap.reported_winner}; ` +
       `risk limit ${snap.risk_limit}; ` +
       `${snap.cards_recorded} of ${snap.cards_total} cards audited`),
  );
  const table = el("table", { "data-test": "risk-table" });
  for (const assertion of snap.assertions) {
    const row = el("tr", {});
    row.appendChild(el("td", {}, assertion));
    // verbatim decimal string from the service
    row.appendChild(
      el("td", { "data-test": `risk-${assertion}` }, snap.risks[assertion] ?? "1"),
    );
    table.appendChild(row);
  }
  section.appendChild(table);
  section.appendChild(riskChart(vm));
  const download = el("button", { "data-test": "download" }, "Download transcript");
  download.addEventListener("click", handlers.onDownload);
  section.appendChild(download);
  return section;
}

/** Risk-versus-draws polyline per assertion (parsing for display only). */
function riskChart(vm: ConsoleViewModel): HTMLElement {
  const width = 420;
  const height = 120;
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("data-test", "risk-chart");
  const draws = vm.history.length;
  for (const [assertion, series] of vm.riskHistory) {
    if (!series.length) continue;
    const points = series
      .map((p) => {
        const x = (p.draw / Math.max(draws, 1)) * (width - 10) + 5;
        const y = height - 5 - Number(p.risk) * (height - 10);
        return `${x.toFixed(1)},${y.toFixed(1)}`;
      })
      .join(" ");
    const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
    line.setAttribute("points", points);
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", "currentColor");
    line.setAttribute("data-assertion", assertion);
    svg.appendChild(line);
  }
  const wrap = el("div", { class: "chart" });
  wrap.appendChild(svg as unknown as HTMLElement);
  return wrap;
}

function drawBoard(vm: ConsoleViewModel, handlers: UiHandlers): HTMLElement {
  const section = el("section", { class: "draws", "data-test": "draw-board" });
  section.appendChild(el("h2", {}, "Retrieval"));
  const button = el("button", { "data-test": "draw-next" }, "Draw next card");
  if (!vm.running || vm.offline) button.setAttribute("disabled", "true");
  button.addEventListener("click", () => handlers.onDraw(1));
  section.appendChild(button);
  const refresh = el("button", { "data-test": "refresh" }, "Refresh");
  refresh.addEventListener("click", handlers.onRefresh);
  section.appendChild(refresh);
  const list = el("ul", { class: "pull-list", "data-test": "pull-list" });
  for (const { container, positions } of vm.pullList()) {
    list.appendChild(
      el("li", {}, `${container}: positions ${positions.join(", ")}`),
    );
  }
  section.appendChild(list);
  return section;
}

function entryPanel(vm: ConsoleViewModel, handlers: UiHandlers): HTMLElement {
  const snap = vm.snapshot!;
  const section = el("section", { class: "entry", "data-test": "entry" });
  section.appendChild(el("h2", {}, "Card entry"));
  for (const instruction of vm.pendingEntries()) {
    section.appendChild(entryCard(vm, snap.candidates, instruction, handlers));
  }
  return section;
}

function entryCard(
  vm: ConsoleViewModel,
  candidates: string[],
  instruction: DrawInstruction,
  handlers: UiHandlers,
): HTMLElement {
  const card = el("div", {
    class: "card",
    "data-test": `entry-${instruction.ordinal}`,
  });
  const where =
    `#${instruction.ordinal}: ${instruction.container} ` +
    `position ${instruction.position}` +
    (instruction.card_id ? ` (card ${instruction.card_id})` : "");
  card.appendChild(el("p", {}, where));
  const enabled = vm.canEnter(instruction.ordinal);
  for (const candidate of [...candidates, null]) {
    const label = candidate ?? "NO VOTE";
    const button = el(
      "button",
      { "data-test": `vote-${instruction.ordinal}-${label}` },
      label,
    );
    if (!enabled) button.setAttribute("disabled", "true");
    button.addEventListener("click", () =>
      handlers.onEntry(instruction.ordinal, candidate),
    );
    card.appendChild(button);
  }
  return card;
}

function historyList(vm: ConsoleViewModel): HTMLElement {
  const section = el("section", { class: "history", "data-test": "history" });
  section.appendChild(el("h2", {}, `Entered: ${vm.history.length}`));
  const list = el("ol", {});
  for (const entry of vm.history.slice(-12).reverse()) {
    const votes = Object.values(entry.votes).join(", ") || "no vote";
    list.appendChild(el("li", {}, `#${entry.ordinal}: ${votes}`));
  }
  section.appendChild(list);
  return section;
}

function conflictPrompt(vm: ConsoleViewModel, handlers: UiHandlers): HTMLElement {
  const box = el("div", { class: "conflict", "data-test": "conflict-prompt" });
  box.appendChild(
    el("p", {},
       `Another station updated the session first (card #${vm.conflict!.ordinal}). ` +
       "The view has been refreshed; check whether the card still needs entry."),
  );
  const dismiss = el("button", { "data-test": "dismiss-conflict" }, "Understood");
  dismiss.addEventListener("click", handlers.onDismissConflict);
  box.appendChild(dismiss);
  return box;
}

function textOf(scope: HTMLElement, test: string): string {
  return (scope.querySelector(`[data-test="${test}"]`) as HTMLTextAreaElement).value;
}

function el(
  tag: string,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) node.textContent = text;
  return node;
}
