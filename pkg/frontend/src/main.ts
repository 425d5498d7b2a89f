import { ApiClient } from "./api";
import { rerender } from "./panes/steps";
import { RobotViewer } from "./viewer";
import { STEP_LABELS, STEP_ORDER, WizardStore } from "./wizard";
import "./style.css";

const api = new ApiClient("");
const store = new WizardStore(api);

const app = document.getElementById("app")!;
const nav = document.createElement("nav");
nav.className = "nav-pane";
const pane = document.createElement("main");
pane.className = "settings-pane";
const viewerBox = document.createElement("section");
viewerBox.className = "viewer-pane";
app.append(nav, pane, viewerBox);

let viewer: RobotViewer | null = null;
try {
  viewer = new RobotViewer(viewerBox);
} catch (err) {
  const fallback = document.createElement("div");
  fallback.className = "viewer-fallback";
  fallback.textContent = `3D view unavailable: ${err instanceof Error ? err.message : err}`;
  viewerBox.append(fallback);
}

function renderNav(): void {
  nav.replaceChildren();
  const snap = store.snapshot();
  for (const step of STEP_ORDER) {
    const item = document.createElement("button");
    item.textContent = STEP_LABELS[step];
    item.className = step === snap.step ? "nav-item current" : "nav-item";
    item.disabled = !store.canNavigate(step);
    item.addEventListener("click", () => {
      store.goTo(step);
    });
    nav.append(item);
  }
}

let lastStep = store.currentStep;
store.subscribe((snap) => {
  renderNav();
  // only step switches rebuild the middle pane; live widgets (progress bars)
  // update themselves through their own subscriptions
  if (snap.step !== lastStep) {
    lastStep = snap.step;
    rerender(pane, snap.step, { store, viewer });
  }
});

// refetch on load so a browser refresh reproduces the identical wizard state
(async () => {
  try {
    await store.refresh();
  } catch {
    // no project yet: the start pane handles it
  }
  renderNav();
  rerender(pane, store.currentStep, { store, viewer });
})();
