/**
 * Inline value adjustment: validate client-side, post with the optimistic
 * concurrency token, update the row immediately, and reconcile on conflict.
 */

import { ApiClient, ConflictError } from "./api.js";
import type { SegmentRecord } from "./types.js";

export interface AdjustOutcome {
  status: "applied" | "conflict" | "invalid" | "error";
  record?: SegmentRecord;
  message?: string;
}

/** Accepts plain or comma-grouped decimals, with an optional leading minus. */
export function validateValueInput(raw: string): string | null {
  const cleaned = raw.trim().replace(/,/g, "");
  if (!/^-?\d+(\.\d+)?$/.test(cleaned)) return null;
  return cleaned;
}

/**
 * Run the adjustment round trip for one record.
 *
 * Invalid input never reaches the network. A 409 means someone adjusted the
 * record since we read it; the caller gets the refetched record to render
 * and can prompt the analyst to retry on top of it.
 */
export async function adjustValue(
  api: ApiClient,
  record: SegmentRecord,
  rawInput: string,
  author: string,
  refetch: () => Promise<SegmentRecord | null>,
  note?: string,
): Promise<AdjustOutcome> {
  const value = validateValueInput(rawInput);
  if (value === null) {
    return { status: "invalid", message: `not a number: ${rawInput}` };
  }
  try {
    const updated = await api.postAdjustment(record.record_id, {
      new_value: value,
      author,
      note,
      expected_audit_length: record.audit.length,
    });
    return { status: "applied", record: updated };
  } catch (error) {
    if (error instanceof ConflictError) {
      const fresh = await refetch();
      return {
        status: "conflict",
        record: fresh ?? undefined,
        message: "record was adjusted by someone else; showing latest",
      };
    }
    return { status: "error", message: String(error) };
  }
}
