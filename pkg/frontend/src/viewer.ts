/**
 * Right panel: the source document in a sandboxed iframe, with scroll-to and
 * highlight of exactly one anchored cell at a time.
 *
 * The filing HTML is arbitrary third-party markup, so it renders inside an
 * iframe with scripts disabled; allow-same-origin is kept so this module can
 * reach into the frame to scroll and restyle cells.
 */

export const HIGHLIGHT_CLASS = "spot-highlight";

const HIGHLIGHT_CSS = `
.${HIGHLIGHT_CLASS} { background-color: #ffeb3b !important; outline: 2px solid #f9a825; }
table { border-collapse: collapse; }
td, th { border: 1px solid #ddd; padding: 2px 6px; font: 13px/1.4 sans-serif; }
`;

export class DocumentViewer {
  private frame: HTMLIFrameElement;
  private current: Element | null = null;

  constructor(container: HTMLElement, doc: Document = document) {
    this.frame = doc.createElement("iframe");
    this.frame.setAttribute("sandbox", "allow-same-origin");
    this.frame.style.width = "100%";
    this.frame.style.height = "100%";
    this.frame.style.border = "none";
    container.appendChild(this.frame);
  }

  /** Replace the rendered document; any highlight is dropped with it. */
  setDocument(html: string): void {
    const frameDoc = this.frame.contentDocument;
    if (!frameDoc) return;
    frameDoc.open();
    frameDoc.write(`<style>${HIGHLIGHT_CSS}</style>${html}`);
    frameDoc.close();
    this.current = null;
  }

  /**
   * Scroll to and highlight the given anchor; the previous highlight is
   * cleared first so exactly one cell is ever lit. Returns false when the
   * anchor does not exist in the document.
   */
  highlightAnchor(anchorId: string | null): boolean {
    if (this.current) {
      this.current.classList.remove(HIGHLIGHT_CLASS);
      this.current = null;
    }
    if (anchorId === null) return true;
    const frameDoc = this.frame.contentDocument;
    const target = frameDoc?.getElementById(anchorId);
    if (!target) return false;
    target.classList.add(HIGHLIGHT_CLASS);
    if (typeof target.scrollIntoView === "function") {
      target.scrollIntoView({ behavior: "smooth", block: "center" });
    }
    this.current = target;
    return true;
  }

  /** Ids of currently highlighted cells; the invariant is at most one. */
  highlightedIds(): string[] {
    const frameDoc = this.frame.contentDocument;
    if (!frameDoc) return [];
    return Array.from(frameDoc.querySelectorAll(`.${HIGHLIGHT_CLASS}`)).map(
      (el) => el.id,
    );
  }
}
