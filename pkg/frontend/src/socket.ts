/** Reconnecting WebSocket wrapper around the session protocol. */

import { Inbox, Outbox, type ServerMessage } from "./protocol.js";

export interface SessionSocket {
  send(type: string, payload: unknown): void;
  close(): void;
  readonly connected: boolean;
}

export interface SocketCallbacks {
  onMessage(msg: ServerMessage): void;
  onOpen(): void;
  onClose(willReconnect: boolean): void;
}

export function connectSession(
  url: string,
  callbacks: SocketCallbacks,
  maxReconnects = 8,
): SessionSocket {
  let ws: WebSocket | null = null;
  let outbox = new Outbox();
  let inbox = new Inbox();
  let attempts = 0;
  let closedByUser = false;
  let open = false;

  function dial(): void {
    ws = new WebSocket(url);
    ws.onopen = () => {
      attempts = 0;
      open = true;
      callbacks.onOpen();
    };
    ws.onmessage = (ev: MessageEvent) => {
      try {
        callbacks.onMessage(inbox.accept(String(ev.data)));
      } catch (err) {
        console.error("bad server message", err);
      }
    };
    ws.onclose = () => {
      open = false;
      if (closedByUser || attempts >= maxReconnects) {
        callbacks.onClose(false);
        return;
      }
      attempts += 1;
      callbacks.onClose(true);
      // fresh connection means a fresh session: restart both sequences
      outbox = new Outbox();
      inbox = new Inbox();
      setTimeout(dial, Math.min(500 * attempts, 4000));
    };
  }

  dial();
  return {
    send(type: string, payload: unknown): void {
      if (ws && ws.readyState === WebSocket.OPEN) {
        ws.send(JSON.stringify(outbox.next(type, payload)));
      }
    },
    close(): void {
      closedByUser = true;
      ws?.close();
    },
    get connected(): boolean {
      return open;
    },
  };
}
