// @vitest-environment jsdom
import { readFileSync } from "node:fs";
import { join } from "node:path";
import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient, type PredictResponse } from "../src/api.js";
import { App } from "../src/app.js";
import { quickPredictCsv } from "../src/csv.js";

const fixtures = join(__dirname, "fixtures");
const predictPayload = JSON.parse(
  readFileSync(join(fixtures, "predict_response.json"), "utf-8"),
) as PredictResponse;
const benzene = JSON.parse(
  readFileSync(join(fixtures, "parse_benzene.json"), "utf-8"),
);
const goldenCsv = readFileSync(join(fixtures, "quick_predict.csv"), "utf-8");

function pageHtml(): string {
  const html = readFileSync(join(__dirname, "..", "index.html"), "utf-8");
  const match = html.match(/<body>([\s\S]*)<\/body>/);
  return match ? match[1]! : "";
}

function jsonResponse(status: number, payload: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => payload,
  } as unknown as Response;
}

function fakeFetch(input: string, init?: RequestInit): Promise<Response> {
  const body = init?.body ? JSON.parse(String(init.body)) : {};
  if (input.endsWith("/api/diseases")) {
    return Promise.resolve(
      jsonResponse(200, {
        diseases: predictPayload.results.map((r) => ({
          id: r.disease_id,
          name: r.disease_name,
        })),
      }),
    );
  }
  if (input.endsWith("/api/parse")) {
    if (body.smiles === "c1ccccc1") {
      return Promise.resolve(jsonResponse(200, benzene));
    }
    return Promise.resolve(
      jsonResponse(400, {
        error: {
          type: "UnmatchedRingBond",
          message: "ring closure 1 never closed (offset 1)",
          offset: 1,
        },
      }),
    );
  }
  if (input.endsWith("/api/predict")) {
    if (body.smiles === "C1CC") {
      return Promise.resolve(
        jsonResponse(400, {
          error: {
            type: "UnmatchedRingBond",
            message: "ring closure 1 never closed (offset 1)",
            offset: 1,
          },
        }),
      );
    }
    return Promise.resolve(jsonResponse(200, predictPayload));
  }
  return Promise.resolve(jsonResponse(404, { error: { type: "x", message: "404" } }));
}

async function mountApp(): Promise<App> {
  document.body.innerHTML = pageHtml();
  const app = new App(new ApiClient(fakeFetch));
  await app.start();
  return app;
}

function typeSmiles(text: string): void {
  const input = document.getElementById("smiles-input") as HTMLInputElement;
  input.value = text;
  input.dispatchEvent(new Event("input"));
}

describe("scripted interaction", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("predict fills the table; editing the input clears it (staleness)", async () => {
    const app = await mountApp();
    typeSmiles("CC(=O)O");
    await app.predict();
    let table = document.getElementById("prediction-table");
    expect(table).not.toBeNull();
    expect(table!.querySelectorAll("tr").length).toBeGreaterThan(1);

    typeSmiles("CC(=O)OC");
    table = document.getElementById("prediction-table");
    expect(table).toBeNull();
    const download = document.getElementById("download") as HTMLButtonElement;
    expect(download.disabled).toBe(true);
  });

  it("highlights the server-reported parse offset", async () => {
    const app = await mountApp();
    typeSmiles("C1CC");
    await app.showStructure();
    const bad = document.querySelector(".bad-char");
    expect(bad).not.toBeNull();
    expect(bad!.textContent).toBe("1"); // offset 1 of "C1CC"
    const structure = document.getElementById("structure")!;
    expect(structure.querySelector("svg")).toBeNull();
    expect(structure.textContent).toContain("ring closure 1 never closed");
  });

  it("renders the structure for valid input and clears it on edit", async () => {
    const app = await mountApp();
    typeSmiles("c1ccccc1");
    await app.showStructure();
    const structure = document.getElementById("structure")!;
    expect(structure.querySelectorAll("g.atom").length).toBe(6);
    expect(structure.querySelectorAll('[data-aromatic="true"]').length).toBe(6);

    typeSmiles("c1ccccc1C");
    expect(structure.querySelector("svg")).toBeNull();
  });

  it("buttons are disabled while the input is empty", async () => {
    await mountApp();
    const show = document.getElementById("show-structure") as HTMLButtonElement;
    const predict = document.getElementById("predict") as HTMLButtonElement;
    expect(show.disabled).toBe(true);
    expect(predict.disabled).toBe(true);
    typeSmiles("C");
    expect(show.disabled).toBe(false);
    expect(predict.disabled).toBe(false);
  });

  it("download reproduces the CLI byte format for the same input", async () => {
    const app = await mountApp();
    typeSmiles("CC(=O)O");
    await app.predict();
    const rows = app.state.prediction!;
    expect(quickPredictCsv(rows)).toBe(goldenCsv);

    // and the button goes through Blob creation when clicked
    let blobText: string | null = null;
    (URL as unknown as Record<string, unknown>).createObjectURL = (blob: Blob) => {
      void blob.text().then((t) => (blobText = t));
      return "blob:fake";
    };
    (URL as unknown as Record<string, unknown>).revokeObjectURL = () => undefined;
    (document.getElementById("download") as HTMLButtonElement).click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(blobText).toBe(goldenCsv);
  });

  it("scores shown match the API payload with 4-decimal display", async () => {
    const app = await mountApp();
    typeSmiles("CC(=O)O");
    await app.predict();
    const cells = document.querySelectorAll("#prediction-table td.score");
    const first = cells[0]!.textContent ?? "";
    expect(first.startsWith(predictPayload.results[0]!.score.toFixed(4))).toBe(true);
  });

  it("top-ten rows are highlighted and the cutoff limits rows", async () => {
    const app = await mountApp();
    typeSmiles("CC(=O)O");
    await app.predict();
    expect(document.querySelectorAll("#prediction-table tr.top-ten").length).toBe(
      Math.min(10, predictPayload.results.length),
    );
    const cutoff = document.getElementById("cutoff") as HTMLSelectElement;
    cutoff.value = "10";
    cutoff.dispatchEvent(new Event("change"));
    // header row + 10 data rows
    expect(document.querySelectorAll("#prediction-table tr").length).toBe(11);
  });

  it("prediction failure with an offset shows the parse error instead", async () => {
    const app = await mountApp();
    typeSmiles("C1CC");
    await app.predict();
    expect(document.getElementById("prediction-table")).toBeNull();
    expect(document.querySelector(".bad-char")).not.toBeNull();
  });

  it("prior picker filters the catalog and feeds selections", async () => {
    const app = await mountApp();
    const search = document.getElementById("prior-search") as HTMLInputElement;
    search.value = predictPayload.results[0]!.disease_id.toLowerCase();
    search.dispatchEvent(new Event("input"));
    const boxes = document.querySelectorAll("#prior-list input[type=checkbox]");
    expect(boxes.length).toBeGreaterThan(0);
    (boxes[0] as HTMLInputElement).click();
    expect(app.state.prior).toContain(predictPayload.results[0]!.disease_id);
  });
});
