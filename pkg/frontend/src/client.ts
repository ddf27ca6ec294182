/**
 * One websocket to the session gateway.
 *
 * The server replays the full filtered feed after every (re)connect,
 * so reconnection is: drop local state, open a fresh socket, refold.
 * The `onReset` callback is where the owner clears its state.
 */

import type { ClientMessage, ServerMessage } from "./protocol";
import { parseServerMessage } from "./protocol";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface BridgeOptions {
  onMessage: (msg: ServerMessage) => void;
  onStatus: (status: ConnectionStatus) => void;
  onReset: () => void;
  retryMs?: number;
}

export interface BridgeClient {
  send(msg: ClientMessage): boolean;
  close(): void;
}

export function sessionUrl(
  base: string,
  sessionId: string,
  role: string,
): string {
  const root = base.replace(/\/$/, "");
  return `${root}/session/${encodeURIComponent(sessionId)}/role/${encodeURIComponent(role)}`;
}

export function connect(url: string, options: BridgeOptions): BridgeClient {
  const retryMs = options.retryMs ?? 2000;
  let socket: WebSocket | null = null;
  let closed = false;
  let timer: ReturnType<typeof setTimeout> | null = null;

  function open(): void {
    if (closed) return;
    options.onReset();
    options.onStatus("connecting");
    socket = new WebSocket(url);
    socket.onopen = () => options.onStatus("open");
    socket.onmessage = (event) => {
      let body: unknown;
      try {
        body = JSON.parse(String(event.data));
      } catch {
        return;
      }
      const msg = parseServerMessage(body);
      if (msg) options.onMessage(msg);
    };
    socket.onclose = () => {
      socket = null;
      if (closed) return;
      options.onStatus("closed");
      timer = setTimeout(open, retryMs);
    };
    socket.onerror = () => {
      // close event follows; nothing to do here
    };
  }

  open();
  return {
    send(msg: ClientMessage): boolean {
      if (!socket || socket.readyState !== WebSocket.OPEN) return false;
      socket.send(JSON.stringify(msg));
      return true;
    },
    close(): void {
      closed = true;
      if (timer !== null) clearTimeout(timer);
      socket?.close();
    },
  };
}
