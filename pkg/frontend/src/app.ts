import { ApiClient } from "./client.js";
import { SessionStore } from "./store.js";
import { render } from "./views.js";

/**
 * Browser shell: render into #app and translate clicks into store calls.
 * All math lives server-side; this file only wires events.
 */
export function mount(root: HTMLElement, base: string, sessionId: string) {
  const store = new SessionStore(new ApiClient(base));
  store.subscribe((view) => {
    root.innerHTML = render(view);
  });

  root.addEventListener("click", (ev) => {
    const target = ev.target as HTMLElement;
    const marker = target.closest("[data-index]");
    if (marker) {
      store.select(Number(marker.getAttribute("data-index")));
      return;
    }
    if (target.closest("[data-role=dismiss-conflict]")) {
      store.dismissConflict();
      return;
    }
    if (target.closest("[data-role=advance]")) {
      const branch = root.querySelector<HTMLInputElement>(
        "input[name=branch]:checked");
      void store.chooseSelected(branch ? branch.value : undefined);
    }
  });

  void store.load(sessionId);
  return store;
}

declare global {
  interface Window { cockpitMount?: typeof mount }
}

if (typeof window !== "undefined") {
  window.cockpitMount = mount;
}
