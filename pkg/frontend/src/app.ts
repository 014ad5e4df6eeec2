// DOM wiring for the prediction console: input, structure preview, ranked
// table with sorting and cutoff, prior picker, CSV download.

import { ApiClient, RequestFailed, type DiseaseEntry, type PredictionRow } from "./api.js";
import { downloadCsv } from "./csv.js";
import { moleculeSvg } from "./render.js";
import {
  displayablePrediction,
  initialState,
  inputChanged,
  parseFailed,
  parseSucceeded,
  predictionArrived,
  togglePrior,
  type UIState,
} from "./state.js";

type SortKey = "rank" | "disease_id" | "disease_name" | "score";

export class App {
  state: UIState = initialState();
  private readonly api: ApiClient;
  private readonly root: Document;
  private catalog: DiseaseEntry[] = [];
  private sortKey: SortKey = "rank";
  private sortAscending = true;
  private baseOrder = new Map<string, number>();

  constructor(api: ApiClient, root: Document = document) {
    this.api = api;
    this.root = root;
  }

  private element<T extends HTMLElement>(id: string): T {
    const node = this.root.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node as T;
  }

  async start(): Promise<void> {
    const input = this.element<HTMLInputElement>("smiles-input");
    input.addEventListener("input", () => {
      this.state = inputChanged(this.state, input.value.trim());
      this.renderAll();
    });
    this.element<HTMLButtonElement>("show-structure").addEventListener("click", () =>
      this.showStructure(),
    );
    this.element<HTMLButtonElement>("predict").addEventListener("click", () =>
      this.predict(),
    );
    this.element<HTMLButtonElement>("download").addEventListener("click", () => {
      const rows = displayablePrediction(this.state);
      if (rows) downloadCsv(rows);
    });
    const cutoff = this.element<HTMLSelectElement>("cutoff");
    cutoff.addEventListener("change", () => {
      this.state = { ...this.state, topK: Number(cutoff.value) };
      this.renderTable();
    });
    this.element<HTMLInputElement>("prior-search").addEventListener("input", () =>
      this.renderPriorPicker(),
    );
    try {
      this.catalog = await this.api.diseases();
    } catch {
      this.catalog = [];
    }
    this.renderAll();
  }

  async showStructure(): Promise<void> {
    const smiles = this.state.smiles;
    if (!smiles || this.state.busy) return;
    this.setBusy(true);
    try {
      const parsed = await this.api.parse(smiles);
      this.state = parseSucceeded(this.state, parsed);
    } catch (error) {
      if (error instanceof RequestFailed) {
        this.state = parseFailed(this.state, error.detail);
      } else {
        this.state = { ...this.state, banner: "network failure - check the service and retry" };
      }
    } finally {
      this.setBusy(false);
      this.renderAll();
    }
  }

  async predict(): Promise<void> {
    const smiles = this.state.smiles;
    if (!smiles || this.state.busy) return;
    this.setBusy(true);
    try {
      const response = await this.api.predict(smiles, this.state.prior);
      this.baseOrder = new Map(
        response.results.map((row, index) => [row.disease_id, index + 1]),
      );
      this.state = predictionArrived(this.state, smiles, response.results);
    } catch (error) {
      if (error instanceof RequestFailed) {
        if (error.detail.offset !== undefined) {
          this.state = parseFailed(this.state, error.detail);
        } else {
          this.state = { ...this.state, banner: error.detail.message };
        }
      } else {
        this.state = { ...this.state, banner: "network failure - check the service and retry" };
      }
    } finally {
      this.setBusy(false);
      this.renderAll();
    }
  }

  private setBusy(busy: boolean): void {
    this.state = { ...this.state, busy };
    this.renderControls();
  }

  sortBy(key: SortKey): void {
    if (this.sortKey === key) {
      this.sortAscending = !this.sortAscending;
    } else {
      this.sortKey = key;
      this.sortAscending = key !== "score";
    }
    this.renderTable();
  }

  private sortedRows(rows: PredictionRow[]): PredictionRow[] {
    const copy = [...rows];
    const direction = this.sortAscending ? 1 : -1;
    copy.sort((x, y) => {
      switch (this.sortKey) {
        case "rank":
          return (
            direction *
            ((this.baseOrder.get(x.disease_id) ?? 0) -
              (this.baseOrder.get(y.disease_id) ?? 0))
          );
        case "disease_id":
          return direction * x.disease_id.localeCompare(y.disease_id);
        case "disease_name":
          return direction * x.disease_name.localeCompare(y.disease_name);
        case "score":
          return direction * (x.score - y.score);
      }
    });
    return copy;
  }

  renderAll(): void {
    this.renderControls();
    this.renderStructure();
    this.renderTable();
    this.renderPriorPicker();
    this.renderBanner();
  }

  private renderControls(): void {
    const hasInput = this.state.smiles.length > 0;
    this.element<HTMLButtonElement>("show-structure").disabled =
      !hasInput || this.state.busy;
    this.element<HTMLButtonElement>("predict").disabled = !hasInput || this.state.busy;
    this.element<HTMLButtonElement>("download").disabled =
      displayablePrediction(this.state) === null;
  }

  private renderBanner(): void {
    const banner = this.element<HTMLDivElement>("banner");
    banner.textContent = this.state.banner ?? "";
    banner.hidden = this.state.banner === null;
  }

  private renderStructure(): void {
    const panel = this.element<HTMLDivElement>("structure");
    if (this.state.parseError) {
      const { offset, message } = this.state.parseError;
      const smiles = this.state.smiles;
      if (offset !== undefined && offset >= 0 && offset < smiles.length) {
        const before = this.root.createElement("code");
        before.textContent = smiles.slice(0, offset);
        const bad = this.root.createElement("code");
        bad.className = "bad-char";
        bad.textContent = smiles[offset] ?? "";
        const after = this.root.createElement("code");
        after.textContent = smiles.slice(offset + 1);
        panel.replaceChildren(before, bad, after);
      } else {
        panel.replaceChildren();
      }
      const note = this.root.createElement("p");
      note.className = "parse-error";
      note.textContent = message;
      panel.appendChild(note);
      return;
    }
    if (this.state.parsed) {
      panel.innerHTML = moleculeSvg(this.state.parsed);
      return;
    }
    panel.replaceChildren();
  }

  private renderTable(): void {
    const container = this.element<HTMLDivElement>("results");
    const rows = displayablePrediction(this.state);
    if (rows === null) {
      container.replaceChildren();
      return;
    }
    const shown = this.sortedRows(rows).slice(0, this.state.topK);
    const table = this.root.createElement("table");
    table.id = "prediction-table";
    const head = this.root.createElement("tr");
    const columns: [SortKey, string][] = [
      ["rank", "#"],
      ["disease_id", "disease"],
      ["disease_name", "name"],
      ["score", "score"],
    ];
    for (const [key, label] of columns) {
      const th = this.root.createElement("th");
      th.textContent = label;
      th.dataset.sort = key;
      th.addEventListener("click", () => this.sortBy(key));
      head.appendChild(th);
    }
    table.appendChild(head);
    for (const row of shown) {
      const rank = this.baseOrder.get(row.disease_id) ?? 0;
      const tr = this.root.createElement("tr");
      if (rank <= 10) tr.classList.add("top-ten");
      const bar =
        `<div class="score-bar"><span style="width:${(row.score * 100).toFixed(1)}%">` +
        `</span></div>`;
      tr.innerHTML =
        `<td>${rank}</td><td>${row.disease_id}</td>` +
        `<td>${escapeHtml(row.disease_name)}</td>` +
        `<td class="score">${row.score.toFixed(4)}${bar}</td>`;
      table.appendChild(tr);
    }
    container.replaceChildren(table);
  }

  private renderPriorPicker(): void {
    const list = this.element<HTMLDivElement>("prior-list");
    const query = this.element<HTMLInputElement>("prior-search").value.toLowerCase();
    const matches = this.catalog.filter(
      (d) =>
        d.id.toLowerCase().includes(query) || d.name.toLowerCase().includes(query),
    );
    list.replaceChildren();
    for (const entry of matches.slice(0, 12)) {
      const label = this.root.createElement("label");
      const box = this.root.createElement("input");
      box.type = "checkbox";
      box.value = entry.id;
      box.checked = this.state.prior.includes(entry.id);
      box.addEventListener("change", () => {
        this.state = togglePrior(this.state, entry.id);
      });
      label.appendChild(box);
      label.appendChild(this.root.createTextNode(` ${entry.id} ${entry.name}`));
      list.appendChild(label);
    }
  }
}

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;");
}
