/**
 * The driver-side protocol service.
 *
 * SUT developers implement DriverController (start/stop/reset hooks plus
 * SUT facts) and call serveController; the test-generation core then drives
 * the SUT remotely. Hook failures surface as 500-class responses carrying
 * the error message.
 */

import * as http from "node:http";
import { AddressInfo } from "node:net";

import { CoverageRecorder } from "./coverage";
import { AuthCredentialDto, InfoDto, SutStateDto } from "./protocol";

export interface DriverController {
  /** Start the SUT (idempotent) and return its base URL. */
  startSut(): Promise<string>;
  stopSut(): Promise<void>;
  /** Restore the fixed initial state, called before every evaluation. */
  resetStateOfSut(): Promise<void>;
  getUrlOfSwaggerJson(): string;
  /** Null means no authentication is needed. */
  getInfoForAuthentication(): AuthCredentialDto[] | null;
  isSutRunning(): boolean;
  packagePrefixes: string;
}

export interface ControllerServer {
  port: number;
  url: string;
  close(): Promise<void>;
}

function readBody(req: http.IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    req.on("data", (c) => chunks.push(c));
    req.on("end", () => resolve(Buffer.concat(chunks).toString("utf8")));
    req.on("error", reject);
  });
}

function send(res: http.ServerResponse, status: number, payload: unknown): void {
  const text = JSON.stringify(payload);
  res.writeHead(status, {
    "Content-Type": "application/json",
    "Content-Length": Buffer.byteLength(text),
  });
  res.end(text);
}

export async function serveController(
  controller: DriverController,
  recorder: CoverageRecorder,
  port = 40100,
  host = "127.0.0.1"
): Promise<ControllerServer> {
  await recorder.start();
  let baseUrl: string | null = null;

  async function dispatch(req: http.IncomingMessage, res: http.ServerResponse): Promise<void> {
    const requestUrl = new URL(req.url ?? "/", "http://driver.local");
    const path = requestUrl.pathname;
    if (path === "/controller/info" && req.method === "GET") {
      const info: InfoDto = {
        isSutRunning: controller.isSutRunning(),
        baseUrlOfSut: controller.isSutRunning() ? baseUrl : null,
        swaggerJsonUrl: controller.getUrlOfSwaggerJson(),
        packagePrefixes: controller.packagePrefixes,
        authInfo: controller.getInfoForAuthentication() ?? [],
      };
      send(res, 200, info);
      return;
    }
    if (path === "/controller/sut" && req.method === "POST") {
      const body = await readBody(req);
      let running = false;
      try {
        running = Boolean(JSON.parse(body || "{}").running);
      } catch {
        send(res, 400, { error: "body must be JSON like {\"running\": true}" });
        return;
      }
      if (running) {
        baseUrl = await controller.startSut();
        const state: SutStateDto = { running: true, baseUrlOfSut: baseUrl };
        send(res, 200, state);
      } else {
        await controller.stopSut();
        const state: SutStateDto = { running: false, baseUrlOfSut: null };
        send(res, 200, state);
      }
      return;
    }
    if (path === "/controller/reset" && req.method === "POST") {
      await controller.resetStateOfSut();
      send(res, 200, { ok: true });
      return;
    }
    if (path === "/controller/targets" && req.method === "GET") {
      const since = requestUrl.searchParams.get("since") ?? "";
      send(res, 200, await recorder.report(since));
      return;
    }
    send(res, 404, { error: `unknown controller path ${path}` });
  }

  const server = http.createServer((req, res) => {
    dispatch(req, res).catch((err: unknown) => {
      const message = err instanceof Error ? err.message : String(err);
      if (!res.headersSent) {
        send(res, 500, { error: message });
      } else {
        res.end();
      }
    });
  });

  await new Promise<void>((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, host, resolve);
  });
  const bound = (server.address() as AddressInfo).port;
  return {
    port: bound,
    url: `http://${host}:${bound}`,
    close: () =>
      new Promise<void>((resolve, reject) => {
        server.close((err) => (err ? reject(err) : resolve()));
        server.closeIdleConnections();
      }),
  };
}
