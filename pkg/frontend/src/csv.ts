// Client-side reconstruction of quick_predict.csv. The byte format must
// match the CLI exactly: LF endings, 6-decimal scores, fields quoted only
// when they contain a comma, quote or newline.

import type { PredictionRow } from "./api.js";

function escapeField(value: string): string {
  if (value.includes(",") || value.includes('"') || value.includes("\n")) {
    return '"' + value.replaceAll('"', '""') + '"';
  }
  return value;
}

export function quickPredictCsv(rows: PredictionRow[]): string {
  const lines = ["disease_id,disease_name,score"];
  for (const row of rows) {
    lines.push(
      `${escapeField(row.disease_id)},${escapeField(row.disease_name)},` +
        row.score.toFixed(6),
    );
  }
  return lines.join("\n") + "\n";
}

export function downloadCsv(rows: PredictionRow[], filename = "quick_predict.csv"): void {
  const blob = new Blob([quickPredictCsv(rows)], { type: "text/csv;charset=utf-8" });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = filename;
  anchor.style.display = "none";
  document.body.appendChild(anchor);
  anchor.click();
  document.body.removeChild(anchor);
  URL.revokeObjectURL(url);
}
