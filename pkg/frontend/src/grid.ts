/**
 * Left panel: the segment records grid. Row selection drives the document
 * highlight; the value cell is editable in place; adjusted rows carry a
 * badge, and rows whose anchor is missing from the document carry a warning
 * badge instead of scrolling anywhere.
 */

import { displayValue, periodText, type SegmentRecord } from "./types.js";

export interface GridCallbacks {
  onSelect(recordId: string): void;
  onEdit(recordId: string, rawValue: string): void;
  onExport(): void;
}

export const SELECTED_CLASS = "row-selected";
export const ADJUSTED_BADGE_CLASS = "badge-adjusted";
export const WARNING_BADGE_CLASS = "badge-warning";

const COLUMNS = ["Segment", "Metric", "Period", "Value", "Currency", ""] as const;

export class RecordsGrid {
  readonly root: HTMLElement;
  private tbody: HTMLTableSectionElement;
  private callbacks: GridCallbacks;
  private doc: Document;
  private brokenAnchors = new Set<string>();

  constructor(container: HTMLElement, callbacks: GridCallbacks, doc: Document = document) {
    this.callbacks = callbacks;
    this.doc = doc;
    this.root = doc.createElement("div");
    this.root.className = "records-grid";

    const toolbar = doc.createElement("div");
    toolbar.className = "grid-toolbar";
    const exportButton = doc.createElement("button");
    exportButton.textContent = "Export CSV";
    exportButton.className = "export-button";
    exportButton.addEventListener("click", () => this.callbacks.onExport());
    toolbar.appendChild(exportButton);
    this.root.appendChild(toolbar);

    const table = doc.createElement("table");
    table.className = "records-table";
    const thead = doc.createElement("thead");
    const headRow = doc.createElement("tr");
    for (const name of COLUMNS) {
      const th = doc.createElement("th");
      th.textContent = name;
      headRow.appendChild(th);
    }
    thead.appendChild(headRow);
    table.appendChild(thead);
    this.tbody = doc.createElement("tbody");
    table.appendChild(this.tbody);
    this.root.appendChild(table);
    container.appendChild(this.root);
  }

  /** Mark a record whose source anchor is missing from the document. */
  markBrokenAnchor(recordId: string): void {
    this.brokenAnchors.add(recordId);
  }

  render(records: SegmentRecord[], selectedId: string | null): void {
    this.tbody.textContent = "";
    for (const record of records) {
      const row = this.doc.createElement("tr");
      row.dataset.recordId = record.record_id;
      if (record.record_id === selectedId) {
        row.classList.add(SELECTED_CLASS);
      }
      row.addEventListener("click", () => this.callbacks.onSelect(record.record_id));

      const cells = [
        record.header_path,
        record.metric_name,
        periodText(record),
      ];
      for (const text of cells) {
        const td = this.doc.createElement("td");
        td.textContent = text;
        row.appendChild(td);
      }

      const valueCell = this.doc.createElement("td");
      valueCell.className = "value-cell";
      const input = this.doc.createElement("input");
      input.value = displayValue(record);
      input.className = "value-input";
      input.addEventListener("click", (event) => event.stopPropagation());
      input.addEventListener("change", () =>
        this.callbacks.onEdit(record.record_id, input.value),
      );
      valueCell.appendChild(input);
      row.appendChild(valueCell);

      const currencyCell = this.doc.createElement("td");
      currencyCell.textContent = record.currency;
      row.appendChild(currencyCell);

      const badgeCell = this.doc.createElement("td");
      if (record.adjusted) {
        const badge = this.doc.createElement("span");
        badge.className = ADJUSTED_BADGE_CLASS;
        badge.textContent = "adjusted";
        badge.title = `${record.audit.length} adjustment(s)`;
        badgeCell.appendChild(badge);
      }
      if (this.brokenAnchors.has(record.record_id)) {
        const badge = this.doc.createElement("span");
        badge.className = WARNING_BADGE_CLASS;
        badge.textContent = "no source cell";
        badgeCell.appendChild(badge);
      }
      row.appendChild(badgeCell);
      this.tbody.appendChild(row);
    }
  }

  selectedRows(): HTMLTableRowElement[] {
    return Array.from(this.tbody.querySelectorAll(`tr.${SELECTED_CLASS}`));
  }

  rowOf(recordId: string): HTMLTableRowElement | null {
    return this.tbody.querySelector(`tr[data-record-id="${recordId}"]`);
  }
}
