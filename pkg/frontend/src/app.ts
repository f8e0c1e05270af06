/** Console bootstrap: wires the three views into a tabbed page.
 *
 * Configuration comes from query parameters or globals:
 *   ?api=http://127.0.0.1:8787&token=practitioner-token
 */

import { ApiClient } from "./api.js";
import { BuilderView } from "./builder.js";
import { DashboardView } from "./dashboard.js";
import { UploadView } from "./upload.js";

export interface ConsoleApp {
  api: ApiClient;
  upload: UploadView;
  builder: BuilderView;
  dashboard: DashboardView;
  show(tab: "upload" | "builder" | "dashboard"): void;
}

export function createApp(doc: Document, baseUrl: string, token: string): ConsoleApp {
  const api = new ApiClient(baseUrl, token);
  const upload = new UploadView(doc, api);
  const builder = new BuilderView(doc, api);
  const dashboard = new DashboardView(doc, api);

  upload.onUploaded = (summary) => builder.useDataset(summary);
  builder.onCreated = (campaignId) => dashboard.watch(campaignId);

  const root = doc.createElement("main");
  root.id = "console-root";
  const nav = doc.createElement("nav");
  const views: Record<string, HTMLElement> = {
    upload: upload.root,
    builder: builder.root,
    dashboard: dashboard.root,
  };
  const show = (tab: "upload" | "builder" | "dashboard") => {
    for (const [name, el] of Object.entries(views)) {
      el.style.display = name === tab ? "block" : "none";
    }
  };
  for (const name of ["upload", "builder", "dashboard"] as const) {
    const b = doc.createElement("button");
    b.id = `tab-${name}`;
    b.textContent = name;
    b.addEventListener("click", () => show(name));
    nav.appendChild(b);
  }
  root.appendChild(nav);
  for (const el of Object.values(views)) root.appendChild(el);
  doc.body.appendChild(root);
  show("upload");

  return { api, upload, builder, dashboard, show };
}

export function bootFromLocation(doc: Document, location: Location): ConsoleApp {
  const params = new URLSearchParams(location.search);
  const baseUrl = params.get("api") ?? "http://127.0.0.1:8787";
  const token = params.get("token") ?? "practitioner-token";
  return createApp(doc, baseUrl, token);
}

declare global {
  interface Window {
    taskadsConsole?: ConsoleApp;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined" && document.currentScript) {
  window.taskadsConsole = bootFromLocation(document, window.location);
}
