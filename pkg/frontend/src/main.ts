/**
 * Workstation wiring: filing picker on top, records grid on the left (40%),
 * source document on the right (60%), a draggable divider between them.
 */

import { adjustValue } from "./adjust.js";
import { ApiClient } from "./api.js";
import { downloadExport } from "./export.js";
import { RecordsGrid } from "./grid.js";
import {
  ViewState,
  initialState,
  loadFiling,
  replaceRecord,
  selectRecord,
  selectedRecord,
} from "./state.js";
import type { SegmentRecord } from "./types.js";
import { DocumentViewer } from "./viewer.js";

export interface Workstation {
  state: ViewState;
  grid: RecordsGrid;
  viewer: DocumentViewer;
  openFiling(filingId: string): Promise<void>;
  select(recordId: string): void;
  edit(recordId: string, rawValue: string): Promise<void>;
  exportCurrent(): Promise<void>;
}

function toast(doc: Document, message: string, retry?: () => void): void {
  const el = doc.createElement("div");
  el.className = "toast";
  el.textContent = message;
  if (retry) {
    const button = doc.createElement("button");
    button.textContent = "retry";
    button.addEventListener("click", () => {
      el.remove();
      retry();
    });
    el.appendChild(button);
  }
  doc.body.appendChild(el);
  setTimeout(() => el.remove(), 6000);
}

export function createWorkstation(
  root: HTMLElement,
  api: ApiClient,
  author = "analyst",
  doc: Document = document,
): Workstation {
  root.classList.add("workstation");

  const picker = doc.createElement("select");
  picker.className = "filing-picker";
  root.appendChild(picker);

  const split = doc.createElement("div");
  split.className = "split";
  const left = doc.createElement("div");
  left.className = "pane pane-left";
  const divider = doc.createElement("div");
  divider.className = "divider";
  const right = doc.createElement("div");
  right.className = "pane pane-right";
  split.append(left, divider, right);
  root.appendChild(split);

  // Default 40/60 split, draggable.
  left.style.flex = "0 0 40%";
  divider.addEventListener("mousedown", (down) => {
    const startX = down.clientX;
    const startWidth = left.getBoundingClientRect().width;
    const total = split.getBoundingClientRect().width;
    const move = (ev: MouseEvent) => {
      const pct = ((startWidth + ev.clientX - startX) / total) * 100;
      left.style.flex = `0 0 ${Math.min(80, Math.max(20, pct))}%`;
    };
    const up = () => {
      doc.removeEventListener("mousemove", move);
      doc.removeEventListener("mouseup", up);
    };
    doc.addEventListener("mousemove", move);
    doc.addEventListener("mouseup", up);
  });

  const viewer = new DocumentViewer(right, doc);

  const workstation: Workstation = {
    state: initialState(),
    grid: undefined as unknown as RecordsGrid,
    viewer,

    async openFiling(filingId: string): Promise<void> {
      try {
        const [segments, html] = await Promise.all([
          api.getSegments(filingId),
          api.getDocument(filingId),
        ]);
        this.state = loadFiling(this.state, filingId, segments.records, html);
        viewer.setDocument(html);
        grid.render(this.state.records, null);
      } catch (error) {
        toast(doc, `failed to load ${filingId}: ${error}`, () =>
          void this.openFiling(filingId),
        );
      }
    },

    select(recordId: string): void {
      this.state = selectRecord(this.state, recordId);
      grid.render(this.state.records, this.state.selectedRecordId);
      const found = viewer.highlightAnchor(this.state.highlightAnchor);
      if (!found && this.state.selectedRecordId) {
        grid.markBrokenAnchor(this.state.selectedRecordId);
        grid.render(this.state.records, this.state.selectedRecordId);
      }
    },

    async edit(recordId: string, rawValue: string): Promise<void> {
      const record = this.state.records.find((r) => r.record_id === recordId);
      if (!record) return;
      const refetch = async (): Promise<SegmentRecord | null> => {
        const segments = await api.getSegments(this.state.selectedFiling ?? "");
        return segments.records.find((r) => r.record_id === recordId) ?? null;
      };
      const outcome = await adjustValue(api, record, rawValue, author, refetch);
      if (outcome.status === "invalid") {
        toast(doc, outcome.message ?? "invalid value");
        grid.render(this.state.records, this.state.selectedRecordId);
        return;
      }
      if (outcome.record) {
        this.state = replaceRecord(this.state, outcome.record);
      }
      grid.render(this.state.records, this.state.selectedRecordId);
      if (outcome.status === "conflict") {
        toast(doc, outcome.message ?? "edit conflict; refetched latest");
      } else if (outcome.status === "error") {
        toast(doc, outcome.message ?? "adjustment failed");
      }
    },

    async exportCurrent(): Promise<void> {
      const record = selectedRecord(this.state);
      const filter = record
        ? { company: undefined, period: undefined, segment: undefined }
        : {};
      try {
        await downloadExport(api, filter, doc);
      } catch (error) {
        toast(doc, `export failed: ${error}`, () => void this.exportCurrent());
      }
    },
  };

  const grid = new RecordsGrid(
    left,
    {
      onSelect: (id) => workstation.select(id),
      onEdit: (id, value) => void workstation.edit(id, value),
      onExport: () => void workstation.exportCurrent(),
    },
    doc,
  );
  workstation.grid = grid;

  picker.addEventListener("change", () => void workstation.openFiling(picker.value));

  void api
    .listFilings()
    .then((response) => {
      for (const filing of response.filings) {
        const option = doc.createElement("option");
        option.value = filing.filing_id;
        option.textContent = `${filing.company_id} — ${filing.filing_id} (${filing.n_records} records)`;
        picker.appendChild(option);
      }
      if (response.filings.length > 0) {
        picker.value = response.filings[0].filing_id;
        void workstation.openFiling(picker.value);
      }
    })
    .catch((error) => toast(doc, `failed to list filings: ${error}`));

  return workstation;
}

declare global {
  interface Window {
    SPOT_API_URL?: string;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const api = new ApiClient(window.SPOT_API_URL ?? "http://127.0.0.1:8000");
  createWorkstation(document.getElementById("app")!, api);
}
