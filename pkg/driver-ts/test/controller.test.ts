import assert from "node:assert/strict";
import { test } from "node:test";

import { DriverController, serveController } from "../src/controller";
import { CoverageRecorder } from "../src/coverage";

async function json(res: Response): Promise<any> {
  return (await res.json()) as any;
}


class StubController implements DriverController {
  packagePrefixes = "stub";
  running = false;
  resets = 0;
  failReset = false;

  async startSut(): Promise<string> {
    this.running = true;
    return "http://127.0.0.1:4242";
  }

  async stopSut(): Promise<void> {
    this.running = false;
  }

  async resetStateOfSut(): Promise<void> {
    if (this.failReset) throw new Error("reset exploded");
    this.resets += 1;
  }

  getUrlOfSwaggerJson(): string {
    return "http://127.0.0.1:4242/swagger.json";
  }

  getInfoForAuthentication() {
    return null;
  }

  isSutRunning(): boolean {
    return this.running;
  }
}

async function withServer(
  fn: (url: string, stub: StubController) => Promise<void>
): Promise<void> {
  const stub = new StubController();
  const recorder = new CoverageRecorder(["nothing"], async () => []);
  const server = await serveController(stub, recorder, 0);
  try {
    await fn(server.url, stub);
  } finally {
    await server.close();
  }
}

test("info has the exact wire shape; null auth becomes empty list", async () => {
  await withServer(async (url) => {
    const res = await fetch(`${url}/controller/info`);
    assert.equal(res.status, 200);
    const info = await json(res);
    assert.deepEqual(Object.keys(info).sort(), [
      "authInfo",
      "baseUrlOfSut",
      "isSutRunning",
      "packagePrefixes",
      "swaggerJsonUrl",
    ]);
    assert.equal(info.isSutRunning, false);
    assert.equal(info.baseUrlOfSut, null);
    assert.deepEqual(info.authInfo, []);
  });
});

test("sut start and stop round trip", async () => {
  await withServer(async (url, stub) => {
    let res = await fetch(`${url}/controller/sut`, {
      method: "POST",
      body: JSON.stringify({ running: true }),
    });
    const started = await json(res);
    assert.deepEqual(started, { running: true, baseUrlOfSut: "http://127.0.0.1:4242" });
    assert.equal(stub.running, true);

    const info = await json(await fetch(`${url}/controller/info`));
    assert.equal(info.isSutRunning, true);
    assert.equal(info.baseUrlOfSut, "http://127.0.0.1:4242");

    res = await fetch(`${url}/controller/sut`, {
      method: "POST",
      body: JSON.stringify({ running: false }),
    });
    assert.deepEqual(await json(res), { running: false, baseUrlOfSut: null });
    assert.equal(stub.running, false);
  });
});

test("reset acknowledges and counts", async () => {
  await withServer(async (url, stub) => {
    const res = await fetch(`${url}/controller/reset`, { method: "POST" });
    assert.equal(res.status, 200);
    assert.deepEqual(await json(res), { ok: true });
    assert.equal(stub.resets, 1);
  });
});

test("hook exceptions surface as 500 with the message", async () => {
  await withServer(async (url, stub) => {
    stub.failReset = true;
    const res = await fetch(`${url}/controller/reset`, { method: "POST" });
    assert.equal(res.status, 500);
    const body = await json(res);
    assert.match(body.error, /reset exploded/);
  });
});

test("unknown controller path is 404", async () => {
  await withServer(async (url) => {
    const res = await fetch(`${url}/controller/bogus`);
    assert.equal(res.status, 404);
  });
});

test("malformed sut body is 400", async () => {
  await withServer(async (url) => {
    const res = await fetch(`${url}/controller/sut`, { method: "POST", body: "}{" });
    assert.equal(res.status, 400);
  });
});

test("targets endpoint forwards marker semantics", async () => {
  await withServer(async (url) => {
    const first = await json(await fetch(`${url}/controller/targets?since=`));
    assert.equal(typeof first.marker, "string");
    assert.ok(Array.isArray(first.targets));
    const second = await json(await fetch(`${url}/controller/targets?since=${first.marker}`));
    assert.deepEqual(second.targets, []);
  });
});
