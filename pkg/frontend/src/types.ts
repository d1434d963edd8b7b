/**
 * Wire types mirrored from the extraction service's schema-versioned API.
 */

export interface FilingSummary {
  filing_id: string;
  company_id: string;
  sector: string;
  doc_type: string;
  filed_at: string;
  is_earnings: boolean;
  n_records: number;
}

export interface FilingsResponse {
  schema_version: number;
  filings: FilingSummary[];
}

export interface RecordPeriod {
  label: string;
  year: number;
  raw: string;
}

export interface RecordValue {
  kind: "amount" | "percent" | "text";
  raw: string;
  value?: string;
  currency?: string;
  scale?: number;
}

export interface AdjustmentEntry {
  record_id: string;
  new_value: string;
  author: string;
  at: string;
  note: string | null;
}

export interface SegmentRecord {
  record_id: string;
  filing_id: string;
  table_id: string;
  header_path: string;
  period: RecordPeriod;
  metric_name: string;
  value: RecordValue;
  currency: string;
  source_cell: [string, number, number];
  classifier_probability: number;
  adjusted: boolean;
  adjusted_value: string | null;
  audit: AdjustmentEntry[];
}

export interface SegmentsResponse {
  schema_version: number;
  filing_id: string;
  records: SegmentRecord[];
}

export interface AdjustmentRequest {
  new_value: string;
  author: string;
  note?: string;
  expected_audit_length: number;
}

export interface ExportFilter {
  company?: string;
  period?: string;
  segment?: string;
}

/** Anchor id of a record's source cell, as injected into the document HTML. */
export function anchorIdOf(record: SegmentRecord): string {
  const [table, row, col] = record.source_cell;
  return `${table}-r${row}-c${col}`;
}

/** Rendered period, e.g. "Q3 2020". */
export function periodText(record: SegmentRecord): string {
  return `${record.period.label} ${record.period.year}`;
}

/** The value the analyst should see: the adjustment when present. */
export function displayValue(record: SegmentRecord): string {
  if (record.adjusted && record.adjusted_value !== null) {
    return record.adjusted_value;
  }
  return record.value.value ?? record.value.raw;
}
