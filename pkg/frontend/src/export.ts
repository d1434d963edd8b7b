/**
 * Export the current view as CSV via the service's /export endpoint and hand
 * it to the browser as a download.
 */

import type { ApiClient } from "./api.js";
import type { ExportFilter } from "./types.js";

export async function downloadExport(
  api: ApiClient,
  filter: ExportFilter,
  doc: Document = document,
): Promise<string> {
  const csv = await api.exportCsv(filter);
  const blob = new Blob([csv], { type: "text/csv" });
  const url = URL.createObjectURL(blob);
  const link = doc.createElement("a");
  link.href = url;
  link.download = "segments.csv";
  doc.body.appendChild(link);
  link.click();
  link.remove();
  URL.revokeObjectURL(url);
  return csv;
}
