/** WebSocket session client: typed send helpers and zod-validated dispatch. */
import {
  ClientMessage,
  PROTOCOL_VERSION,
  ServerMessage,
  type FrameRecordT,
  type ModuleNameT,
  type ServerMessageT,
} from "./protocol.js";

export interface SessionHandlers {
  onCreated?: (msg: Extract<ServerMessageT, { type: "session_created" }>) => void;
  onSnapshot?: (msg: Extract<ServerMessageT, { type: "state_snapshot" }>) => void;
  onEvent?: (msg: Extract<ServerMessageT, { type: "event" }>) => void;
  onCompleted?: (msg: Extract<ServerMessageT, { type: "completed" }>) => void;
  onError?: (msg: Extract<ServerMessageT, { type: "error" }>) => void;
  onClose?: () => void;
}

export class SessionClient {
  private ws: WebSocket;
  private handlers: SessionHandlers;

  constructor(url: string, handlers: SessionHandlers) {
    this.handlers = handlers;
    this.ws = new WebSocket(url);
    this.ws.addEventListener("message", (ev: MessageEvent) => {
      const msg = ServerMessage.parse(JSON.parse(String(ev.data)));
      switch (msg.type) {
        case "session_created":
          this.handlers.onCreated?.(msg);
          break;
        case "state_snapshot":
          this.handlers.onSnapshot?.(msg);
          break;
        case "event":
          this.handlers.onEvent?.(msg);
          break;
        case "completed":
          this.handlers.onCompleted?.(msg);
          break;
        case "error":
          this.handlers.onError?.(msg);
          break;
      }
    });
    this.ws.addEventListener("close", () => this.handlers.onClose?.());
  }

  ready(): Promise<void> {
    if (this.ws.readyState === WebSocket.OPEN) return Promise.resolve();
    return new Promise((resolve, reject) => {
      this.ws.addEventListener("open", () => resolve(), { once: true });
      this.ws.addEventListener("error", (e) => reject(e), { once: true });
    });
  }

  private send(msg: unknown): void {
    this.ws.send(JSON.stringify(ClientMessage.parse(msg)));
  }

  hello(clientVersion = "trainer-ui/0.1"): void {
    this.send({ type: "hello", v: PROTOCOL_VERSION, client_version: clientVersion });
  }

  createSession(
    module: ModuleNameT,
    seed: number,
    meta: Record<string, unknown> = {}
  ): void {
    this.send({ type: "create_session", module, seed, participant_meta: meta });
  }

  sendFrame(frame: FrameRecordT): void {
    this.send({ type: "input_frame", frame });
  }

  endSession(): void {
    this.send({ type: "end_session" });
  }

  close(): void {
    this.ws.close();
  }
}
