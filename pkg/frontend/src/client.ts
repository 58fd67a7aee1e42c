// WebSocket client: decodes frames and hands them to the app through a
// latest-value callback. Messages out are fire-and-forget JSON.

import { decodeServerFrame, type ClientMessage, type ServerFrame } from "./protocol.js";

export type BridgeClient = {
  send(msg: ClientMessage): void;
  close(): void;
};

export function connect(
  url: string,
  onFrame: (frame: ServerFrame) => void,
  onStatus: (connected: boolean) => void,
): BridgeClient {
  let ws: WebSocket | null = null;
  let closed = false;

  const open = () => {
    ws = new WebSocket(url);
    ws.onopen = () => onStatus(true);
    ws.onmessage = (ev) => {
      const frame = decodeServerFrame(String(ev.data));
      if (frame) onFrame(frame);
    };
    ws.onclose = () => {
      onStatus(false);
      if (!closed) setTimeout(open, 1000); // simple retry
    };
    ws.onerror = () => ws?.close();
  };
  open();

  return {
    send(msg: ClientMessage): void {
      if (ws && ws.readyState === WebSocket.OPEN) {
        ws.send(JSON.stringify(msg));
      }
    },
    close(): void {
      closed = true;
      ws?.close();
    },
  };
}
