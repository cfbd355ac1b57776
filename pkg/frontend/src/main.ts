import { Client } from "./api.js";
import { renderApp } from "./render.js";
import { SessionFlow } from "./state.js";

const params = new URLSearchParams(window.location.search);
const baseUrl =
  params.get("api") ?? localStorage.getItem("dxsel_api") ?? window.location.origin;
const token = params.get("token") ?? localStorage.getItem("dxsel_token") ?? undefined;

const root = document.getElementById("app")!;
const client = new Client(baseUrl, token);
const flow = new SessionFlow(client, (current) => renderApp(root, current));

void flow.loadDatasets().then(() => renderApp(root, flow));
