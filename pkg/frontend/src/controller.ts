/** Session state machine.
 *
 * The server owns the cursor: the controller never decides which item
 * comes next, it only asks. Completed items are unreachable because the
 * only navigation is "submit both sides, then fetch next".
 */

import { ApiError, ItemView, ServiceClient, SessionInfo, Side } from "./api.js";

export type Phase = "idle" | "loading" | "item" | "submitting" | "error" | "done";

export interface SliderState {
  value: number;
  interacted: boolean;
}

const SIDES: Side[] = ["left", "right"];

function freshSliders(): Record<Side, SliderState> {
  return {
    left: { value: 50, interacted: false },
    right: { value: 50, interacted: false },
  };
}

export class SessionController {
  phase: Phase = "idle";
  session: SessionInfo | null = null;
  view: ItemView | null = null;
  sliders: Record<Side, SliderState> = freshSliders();
  errorMessage: string | null = null;

  private accepted = new Set<Side>();
  private lastAction: "load" | "submit" = "load";
  private listeners: Array<() => void> = [];

  constructor(private readonly client: ServiceClient) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  get nextEnabled(): boolean {
    return (
      this.phase === "item" &&
      this.sliders.left.interacted &&
      this.sliders.right.interacted
    );
  }

  /** Create a session, or resume one at the server's cursor. */
  async start(annotator: string, hit: string, sessionId?: string): Promise<void> {
    this.phase = "loading";
    this.emit();
    try {
      this.session = sessionId
        ? await this.client.getSession(sessionId)
        : await this.client.createSession(annotator, hit);
    } catch (error) {
      this.fail(error);
      return;
    }
    await this.loadNext();
  }

  /** Record a slider movement; only UI event handlers may call this. */
  moveSlider(side: Side, value: number): void {
    if (this.phase !== "item") return;
    const clamped = Math.min(100, Math.max(0, Math.round(value)));
    this.sliders[side] = { value: clamped, interacted: true };
    this.emit();
  }

  async submit(): Promise<void> {
    if (!this.nextEnabled || !this.session || !this.view) return;
    this.phase = "submitting";
    this.lastAction = "submit";
    this.emit();
    for (const side of SIDES) {
      if (this.accepted.has(side)) continue;
      try {
        await this.client.submitRating(
          this.session.session_id,
          this.view.item,
          side,
          this.sliders[side].value,
          this.sliders[side].interacted,
        );
        this.accepted.add(side);
      } catch (error) {
        if (error instanceof ApiError) {
          if (error.code === "DuplicateRating") {
            // an earlier attempt landed; the server already has this side
            this.accepted.add(side);
            continue;
          }
          if (error.code === "OutOfOrder" || error.code === "SessionComplete") {
            // cursor moved under us: trust the server and refetch
            await this.loadNext();
            return;
          }
        }
        this.fail(error); // network failure: sliders stay as they are
        return;
      }
    }
    await this.loadNext();
  }

  /** Re-attempt whatever failed, without touching slider state. */
  async retry(): Promise<void> {
    if (this.phase !== "error") return;
    if (this.lastAction === "submit" && this.view) {
      this.phase = "item";
      await this.submit();
    } else {
      await this.loadNext();
    }
  }

  private async loadNext(): Promise<void> {
    if (!this.session) return;
    this.lastAction = "load";
    try {
      this.view = await this.client.nextItem(this.session.session_id);
    } catch (error) {
      if (error instanceof ApiError && error.code === "SessionComplete") {
        this.phase = "done";
        this.view = null;
        this.emit();
        return;
      }
      this.fail(error);
      return;
    }
    this.sliders = freshSliders();
    this.accepted.clear();
    this.phase = "item";
    this.errorMessage = null;
    this.emit();
  }

  private fail(error: unknown): void {
    this.phase = "error";
    this.errorMessage = error instanceof Error ? error.message : String(error);
    this.emit();
  }
}
