/**
 * Page bootstrap: wire the client to the host that served this page.
 *
 * Query parameters pass straight into the session descriptor:
 * `?form=<id>` requests a customization form, `?detail=<level>` a service
 * detail level (the broker understands `compact`).
 */

import { UbiClient } from "./client.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const params = new URLSearchParams(window.location.search);
const client = new UbiClient({
  root,
  form: params.get("form") ?? undefined,
  detail: params.get("detail") ?? undefined,
  keepaliveSeconds: 60,
});

const scheme = window.location.protocol === "https:" ? "wss" : "ws";
client.connect(`${scheme}://${window.location.host}/ubi`);

window.addEventListener("beforeunload", () => client.close());

// handy when poking at a live session from the console
declare global {
  interface Window {
    ubi: UbiClient;
  }
}
window.ubi = client;
