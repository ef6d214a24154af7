/**
 * DOM rendering for the explorer. One function per panel, all building
 * elements through the target's ownerDocument so the same code runs in
 * a browser and under jsdom in tests.
 *
 * Probabilities arrive as canonical decimal strings and are placed into
 * text nodes untouched; only bar widths go through parseFloat.
 */

import { ComponentNode, RankingEntry } from "./api.js";
import { AppState, visibleVariables } from "./viewmodel.js";

export interface Actions {
  submitEvidence(variable: string, state: string): void;
  retract(variable: string): void;
  clearEvidence(): void;
  open(path: string): void;
  close(path: string): void;
}

export function levelLabel(level: string): string {
  return level === "" ? "top" : level;
}

function el(
  doc: Document,
  tag: string,
  className?: string,
  text?: string,
): HTMLElement {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function button(
  doc: Document,
  label: string,
  disabled: boolean,
  onClick: () => void,
): HTMLButtonElement {
  const b = doc.createElement("button");
  b.type = "button";
  b.textContent = label;
  b.disabled = disabled;
  b.addEventListener("click", onClick);
  return b;
}

function renderBanners(doc: Document, state: AppState, actions: Actions): HTMLElement {
  const box = el(doc, "div", "banners");
  if (state.fault) {
    box.appendChild(el(doc, "div", "banner fault", state.fault));
  }
  if (state.view?.impossible) {
    const banner = el(doc, "div", "banner impossible");
    banner.appendChild(
      el(
        doc,
        "span",
        undefined,
        "These observations cannot all hold under the model. Retract one to continue.",
      ),
    );
    box.appendChild(banner);
  }
  if (state.expandHint) {
    const hint = state.expandHint;
    const banner = el(doc, "div", "banner expand-first");
    banner.appendChild(
      el(doc, "span", undefined, `That variable is hidden. Open ${hint} first.`),
    );
    banner.appendChild(button(doc, `open ${hint}`, state.busy, () => actions.open(hint)));
    box.appendChild(banner);
  }
  if (state.formError) {
    box.appendChild(el(doc, "div", "banner form-error", state.formError));
  }
  return box;
}

function renderCounters(doc: Document, state: AppState): HTMLElement {
  const list = el(doc, "ul", "counters");
  const dirty = new Set(state.view?.dirty ?? []);
  const levels = state.structure?.levels ?? Object.keys(state.counters);
  for (const level of levels) {
    const item = el(doc, "li", dirty.has(level) ? "counter dirty" : "counter");
    item.dataset.level = level;
    item.appendChild(el(doc, "span", "level", levelLabel(level)));
    item.appendChild(el(doc, "span", "count", String(state.counters[level] ?? 0)));
    list.appendChild(item);
  }
  return list;
}

function renderEvidenceForm(doc: Document, state: AppState, actions: Actions): HTMLElement {
  const box = el(doc, "section", "evidence");
  box.appendChild(el(doc, "h2", undefined, "Observations"));

  if (state.structure && state.view) {
    const variables = visibleVariables(state.structure, state.view);
    const varSelect = doc.createElement("select");
    varSelect.className = "evidence-variable";
    const stateSelect = doc.createElement("select");
    stateSelect.className = "evidence-state";

    const fillStates = () => {
      stateSelect.textContent = "";
      const info = state.structure?.variables[varSelect.value];
      for (const s of info?.states ?? []) {
        const option = doc.createElement("option");
        option.value = s;
        option.textContent = s;
        stateSelect.appendChild(option);
      }
    };
    for (const name of variables) {
      const option = doc.createElement("option");
      option.value = name;
      option.textContent = name;
      varSelect.appendChild(option);
    }
    varSelect.addEventListener("change", fillStates);
    fillStates();

    const row = el(doc, "div", "evidence-entry");
    row.appendChild(varSelect);
    row.appendChild(stateSelect);
    row.appendChild(
      button(doc, "observe", state.busy, () =>
        actions.submitEvidence(varSelect.value, stateSelect.value),
      ),
    );
    box.appendChild(row);
  }

  const current = el(doc, "ul", "evidence-list");
  const evidence = state.view?.evidence ?? {};
  for (const name of Object.keys(evidence).sort()) {
    const item = el(doc, "li", "evidence-item");
    item.dataset.variable = name;
    item.appendChild(el(doc, "span", undefined, `${name} = ${evidence[name]}`));
    item.appendChild(button(doc, "retract", state.busy, () => actions.retract(name)));
    current.appendChild(item);
  }
  box.appendChild(current);
  if (Object.keys(evidence).length > 0) {
    box.appendChild(button(doc, "clear all", state.busy, () => actions.clearEvidence()));
  }
  return box;
}

function renderComponent(
  doc: Document,
  node: ComponentNode,
  state: AppState,
  actions: Actions,
): HTMLElement {
  const expanded = new Set(state.view?.expanded ?? []);
  const item = el(doc, "li", "component");
  item.dataset.path = node.path;
  item.appendChild(el(doc, "span", "name", node.path));
  if (node.refined) {
    const isOpen = expanded.has(node.path);
    item.appendChild(
      button(doc, isOpen ? "close" : "open", state.busy, () =>
        isOpen ? actions.close(node.path) : actions.open(node.path),
      ),
    );
    if (isOpen) {
      const children = el(doc, "ul", "children");
      for (const child of node.children) {
        children.appendChild(renderComponent(doc, child, state, actions));
      }
      item.appendChild(children);
    }
  }
  return item;
}

function renderTree(doc: Document, state: AppState, actions: Actions): HTMLElement {
  const box = el(doc, "section", "structure");
  box.appendChild(el(doc, "h2", undefined, "Components"));
  const list = el(doc, "ul", "tree");
  for (const node of state.structure?.components ?? []) {
    list.appendChild(renderComponent(doc, node, state, actions));
  }
  box.appendChild(list);
  return box;
}

function renderBar(doc: Document, entry: RankingEntry): HTMLElement {
  const item = el(doc, "li", "posterior");
  item.dataset.component = entry.component;
  item.dataset.variable = entry.variable;
  item.appendChild(el(doc, "h3", undefined, `${entry.component} [${entry.variable}]`));
  for (const [i, stateName] of entry.states.entries()) {
    const prob = entry.probabilities[i] ?? "0.000000000";
    const row = el(doc, "div", stateName === entry.ok_state ? "bar ok" : "bar");
    row.dataset.state = stateName;
    const fill = el(doc, "div", "fill");
    fill.style.width = `${(parseFloat(prob) * 100).toFixed(2)}%`;
    row.appendChild(fill);
    const label = el(doc, "span", "bar-label");
    label.appendChild(el(doc, "span", "state", stateName));
    label.appendChild(el(doc, "span", "prob", prob));
    row.appendChild(label);
    item.appendChild(row);
  }
  return item;
}

function renderPosteriors(doc: Document, state: AppState): HTMLElement {
  const stale = (state.view?.dirty.length ?? 0) > 0;
  const box = el(doc, "section", stale ? "posteriors stale" : "posteriors");
  const heading = el(doc, "h2", undefined, "Diagnosis");
  if (stale) heading.appendChild(el(doc, "span", "stale-badge", "stale"));
  box.appendChild(heading);

  if (state.report) {
    box.appendChild(
      el(doc, "p", "likelihood", `likelihood ${state.report.likelihood}`),
    );
    const list = el(doc, "ol", "bars");
    for (const entry of state.report.ranking) {
      list.appendChild(renderBar(doc, entry));
    }
    box.appendChild(list);
    if (state.report.ranking.length === 0) {
      box.appendChild(el(doc, "p", "empty", "no posteriors to show"));
    }
  } else {
    box.appendChild(el(doc, "p", "empty", "nothing propagated yet"));
  }
  return box;
}

/** Rebuild the whole interface under `root` from the current state. */
export function renderApp(root: HTMLElement, state: AppState, actions: Actions): void {
  const doc = root.ownerDocument;
  root.textContent = "";
  root.classList.toggle("busy", state.busy);

  root.appendChild(renderBanners(doc, state, actions));
  if (state.phase === "empty") {
    root.appendChild(el(doc, "p", "placeholder", "Load a schematic to begin."));
    return;
  }
  root.appendChild(renderCounters(doc, state));
  const main = el(doc, "div", "panels");
  main.appendChild(renderTree(doc, state, actions));
  main.appendChild(renderEvidenceForm(doc, state, actions));
  main.appendChild(renderPosteriors(doc, state));
  root.appendChild(main);
}
