/** Entry point: wires the controller to the page.
 *
 * Query parameters: ?annotator=<name>&hit=<hit id>[&api=<base url>].
 * The session id is kept in localStorage so a reload resumes at the
 * server's cursor instead of creating a duplicate session.
 */

import { ServiceClient } from "./api.js";
import { SessionController } from "./controller.js";
import { mount } from "./ui.js";

export async function boot(root: HTMLElement): Promise<SessionController> {
  const params = new URLSearchParams(window.location.search);
  const annotator = params.get("annotator") ?? "";
  const hit = params.get("hit") ?? "";
  const base = params.get("api") ?? "";

  const controller = new SessionController(new ServiceClient(base));
  mount(controller, root);

  const storageKey = `metricprobe-session:${annotator}:${hit}`;
  const existing = window.localStorage.getItem(storageKey) ?? undefined;
  await controller.start(annotator, hit, existing);
  if (controller.session) {
    window.localStorage.setItem(storageKey, controller.session.session_id);
  }
  return controller;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot(document.getElementById("app")!);
}
