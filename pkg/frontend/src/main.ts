import { ApiClient } from "./api.js";
import { App } from "./app.js";

window.addEventListener("DOMContentLoaded", () => {
  const app = new App(new ApiClient());
  void app.start();
});
