/**
 * Browser entry point: wires the store to the DOM and exposes the
 * load/connect controls at the top of the page.
 */

import { HttpApi } from "./api.js";
import { Actions, renderApp } from "./render.js";
import { DiagnosisSession } from "./viewmodel.js";

function defaultBaseUrl(): string {
  const here = window.location;
  if (here.protocol.startsWith("http")) return here.origin;
  return "http://127.0.0.1:8351";
}

function start(): void {
  const urlInput = document.getElementById("base-url") as HTMLInputElement;
  const docInput = document.getElementById("document") as HTMLTextAreaElement;
  const loadButton = document.getElementById("load") as HTMLButtonElement;
  const root = document.getElementById("app") as HTMLElement;

  urlInput.value = defaultBaseUrl();

  let session = new DiagnosisSession(new HttpApi(urlInput.value));

  const actions: Actions = {
    submitEvidence: (variable, state) => void session.submitEvidence(variable, state),
    retract: (variable) => void session.retract(variable),
    clearEvidence: () => void session.clearEvidence(),
    open: (path) => void session.open(path),
    close: (path) => void session.close(path),
  };

  const attach = () => {
    session.subscribe((state) => renderApp(root, state, actions));
    renderApp(root, session.getState(), actions);
  };
  attach();

  loadButton.addEventListener("click", () => {
    // a new base URL means a new client; a fresh store keeps ids straight
    session = new DiagnosisSession(new HttpApi(urlInput.value.replace(/\/+$/, "")));
    attach();
    void session.load(docInput.value);
  });
}

window.addEventListener("DOMContentLoaded", start);
