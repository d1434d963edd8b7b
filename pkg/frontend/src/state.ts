/**
 * View state for the split screen. One invariant matters: whenever a record
 * is selected, the highlight anchor is exactly that record's source-cell
 * anchor — never a stale one, never more than one.
 */

import { anchorIdOf, type FilingSummary, type SegmentRecord } from "./types.js";

export interface ViewState {
  filings: FilingSummary[];
  selectedFiling: string | null;
  records: SegmentRecord[];
  selectedRecordId: string | null;
  documentHtml: string;
  highlightAnchor: string | null;
}

export function initialState(): ViewState {
  return {
    filings: [],
    selectedFiling: null,
    records: [],
    selectedRecordId: null,
    documentHtml: "",
    highlightAnchor: null,
  };
}

export function selectedRecord(state: ViewState): SegmentRecord | null {
  if (state.selectedRecordId === null) return null;
  return state.records.find((r) => r.record_id === state.selectedRecordId) ?? null;
}

/** Select a record; the highlight anchor follows it. */
export function selectRecord(state: ViewState, recordId: string): ViewState {
  const record = state.records.find((r) => r.record_id === recordId);
  if (!record) {
    return { ...state, selectedRecordId: null, highlightAnchor: null };
  }
  return {
    ...state,
    selectedRecordId: record.record_id,
    highlightAnchor: anchorIdOf(record),
  };
}

/** Load a filing's records and document; selection resets. */
export function loadFiling(
  state: ViewState,
  filingId: string,
  records: SegmentRecord[],
  documentHtml: string,
): ViewState {
  return {
    ...state,
    selectedFiling: filingId,
    records,
    selectedRecordId: null,
    documentHtml,
    highlightAnchor: null,
  };
}

/** Replace one record in place (after an adjustment or a refetch). */
export function replaceRecord(state: ViewState, record: SegmentRecord): ViewState {
  return {
    ...state,
    records: state.records.map((r) =>
      r.record_id === record.record_id ? record : r,
    ),
  };
}

export function assertInvariant(state: ViewState): void {
  const record = selectedRecord(state);
  if (record === null) {
    if (state.highlightAnchor !== null) {
      throw new Error("highlight anchor set without a selected record");
    }
    return;
  }
  if (state.highlightAnchor !== anchorIdOf(record)) {
    throw new Error(
      `highlight anchor ${state.highlightAnchor} does not match selected record`,
    );
  }
}
