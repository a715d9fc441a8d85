import { scoreDescription } from "./api.js";
import { Session } from "./state.js";
import { mountWizard } from "./wizard.js";

declare global {
  interface Window {
    SERVICE_BASE_URL?: string;
  }
}

const base =
  window.SERVICE_BASE_URL ??
  document.querySelector<HTMLMetaElement>('meta[name="service-base"]')?.content ??
  "http://localhost:8000";

const session = new Session((request) => scoreDescription(base, request));
const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app mount point");
}
mountWizard(root, session);
