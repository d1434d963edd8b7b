/**
 * Integration tests over the wired workstation with the in-memory server:
 * selection highlighting, the adjustment round trip, the 409 conflict path,
 * and export.
 */

import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { createWorkstation, type Workstation } from "../src/main.js";
import { HIGHLIGHT_CLASS } from "../src/viewer.js";
import { DOCUMENT_HTML, FakeServer, makeRecord } from "./fakeServer.js";

function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

/** The iframe document lives in its own realm; spy on scrolls there. */
function patchFrameScroll(scrolled: string[]): void {
  const frame = document.querySelector("iframe") as HTMLIFrameElement;
  const win = frame.contentWindow as unknown as {
    Element: { prototype: { scrollIntoView: (this: Element) => void } };
  };
  win.Element.prototype.scrollIntoView = function (this: Element) {
    scrolled.push(this.id);
  };
}

describe("workstation", () => {
  let server: FakeServer;
  let workstation: Workstation;
  let scrolled: string[];

  beforeEach(async () => {
    document.body.innerHTML = "<div id='root'></div>";
    scrolled = [];
    server = new FakeServer([
      makeRecord(),
      makeRecord({
        record_id: "r2",
        header_path: "Net sales --> Services",
        source_cell: ["t0", 4, 1],
      }),
    ]);
    const api = new ApiClient("http://svc", server.fetch);
    workstation = createWorkstation(
      document.getElementById("root")!, api, "analyst", document,
    );
    await flush();
    await workstation.openFiling("tech777-f1");
    patchFrameScroll(scrolled);
  });

  it("selecting a record highlights exactly one anchor and scrolls to it", () => {
    workstation.select("r1");
    expect(workstation.viewer.highlightedIds()).toEqual(["t0-r3-c1"]);
    expect(scrolled).toEqual(["t0-r3-c1"]);
    expect(workstation.grid.selectedRows()).toHaveLength(1);
    expect(workstation.grid.selectedRows()[0].dataset.recordId).toBe("r1");
  });

  it("selecting a second record clears the first highlight", () => {
    workstation.select("r1");
    workstation.select("r2");
    expect(workstation.viewer.highlightedIds()).toEqual(["t0-r4-c1"]);
    const frameDoc = (document.querySelector("iframe") as HTMLIFrameElement)
      .contentDocument!;
    expect(frameDoc.querySelectorAll(`.${HIGHLIGHT_CLASS}`)).toHaveLength(1);
  });

  it("a record with a missing anchor gets a warning badge and no scroll", async () => {
    server.records.push(
      makeRecord({ record_id: "r3", source_cell: ["t9", 0, 0] }),
    );
    await workstation.openFiling("tech777-f1");
    patchFrameScroll(scrolled);
    workstation.select("r3");
    expect(scrolled).toEqual([]);
    expect(workstation.viewer.highlightedIds()).toEqual([]);
    const row = workstation.grid.rowOf("r3")!;
    expect(row.querySelector(".badge-warning")).not.toBeNull();
  });

  it("a value edit round-trips and the export carries the adjusted value", async () => {
    await workstation.edit("r1", "14,500,000.00");
    const posts = server.requests.filter((r) => r.method === "POST");
    expect(posts).toHaveLength(1);
    expect(posts[0].body).toMatchObject({
      new_value: "14500000.00",
      author: "analyst",
      expected_audit_length: 0,
    });
    const row = workstation.grid.rowOf("r1")!;
    expect(row.querySelector(".badge-adjusted")).not.toBeNull();

    const api = new ApiClient("http://svc", server.fetch);
    const csv = await api.exportCsv({});
    const lines = csv.trim().split("\r\n");
    const adjustedLine = lines.find((l) => l.includes(",true,"));
    expect(adjustedLine).toBeDefined();
    expect(adjustedLine).toContain('"14,500,000.00"');
  });

  it("non-numeric input shows an error and sends no request", async () => {
    await workstation.edit("r1", "twelve");
    expect(server.requests.filter((r) => r.method === "POST")).toHaveLength(0);
    expect(document.querySelector(".toast")).not.toBeNull();
  });

  it("a 409 conflict triggers a refetch of the latest record", async () => {
    // Someone else adjusts first: the stored audit grows under us.
    server.records[0].audit.push({
      record_id: "r1", new_value: "1", author: "rival",
      at: new Date().toISOString(), note: null,
    });
    server.records[0].adjusted = true;
    server.records[0].adjusted_value = "1";

    await workstation.edit("r1", "2");
    const posts = server.requests.filter((r) => r.method === "POST");
    expect(posts).toHaveLength(1);
    // The conflict forced a refetch of segments after the failed POST.
    const segmentGets = server.requests.filter(
      (r) => r.method === "GET" && r.url.includes("/segments"),
    );
    expect(segmentGets.length).toBeGreaterThanOrEqual(2);
    // The UI now shows the rival's value, not ours.
    const record = workstation.state.records.find((r) => r.record_id === "r1")!;
    expect(record.adjusted_value).toBe("1");
    expect(document.querySelector(".toast")?.textContent).toContain("adjusted");
  });

  it("retrying after a conflict with the fresh token succeeds", async () => {
    server.records[0].audit.push({
      record_id: "r1", new_value: "1", author: "rival",
      at: new Date().toISOString(), note: null,
    });
    await workstation.edit("r1", "2"); // conflict + refetch, audit length now 1
    await workstation.edit("r1", "2"); // retry on top of the fresh record
    const record = workstation.state.records.find((r) => r.record_id === "r1")!;
    expect(record.adjusted_value).toBe("2");
    expect(record.audit).toHaveLength(2);
  });

  it("export button downloads a CSV with one row per record", async () => {
    const clicks: string[] = [];
    (HTMLAnchorElement.prototype as any).click = function () {
      clicks.push((this as HTMLAnchorElement).download);
    };
    (URL as any).createObjectURL = () => "blob:fake";
    (URL as any).revokeObjectURL = () => undefined;
    await workstation.exportCurrent();
    expect(clicks).toEqual(["segments.csv"]);
    const exports = server.requests.filter((r) => r.url.includes("/export"));
    expect(exports).toHaveLength(1);
  });
});
