/**
 * Demo SUT: a small pet CRUD API behind an API key.
 *
 * Deliberate behaviors for the test generator to find:
 *   - a seeded fault: creating a pet with a negative quantity throws, which
 *     the server surfaces as HTTP 500;
 *   - a deep equality-guarded branch: tag === "magic" answers differently,
 *     reachable through the branch-distance decorator on the guard;
 *   - the usual 401/404 handled-error paths.
 *
 * This module must be loaded after the coverage recorder has started so
 * its functions are enumerated for line targets.
 */

import { createServer } from "node:http";
import { AddressInfo } from "node:net";

import { CoverageRecorder } from "../coverage";
import { guardLt, guardStrEq } from "../instrument";

export const API_KEY = "ApiKey administrator";

export interface Pet {
  id: number;
  name: string;
  tag: string;
  quantity: number;
}

export class PetStore {
  pets = new Map<number, Pet>();
  nextId = 1;

  reset(): void {
    this.pets.clear();
    this.nextId = 1;
  }

  insert(name: string, tag: string, quantity: number): Pet {
    const pet = { id: this.nextId, name, tag, quantity };
    this.nextId += 1;
    this.pets.set(pet.id, pet);
    return pet;
  }
}

type Reply = { status: number; payload: unknown };

function createPet(store: PetStore, recorder: CoverageRecorder, raw: string): Reply {
  let body: Record<string, unknown>;
  try {
    body = JSON.parse(raw || "{}");
  } catch {
    return { status: 400, payload: { error: "body is not valid JSON" } };
  }
  if (typeof body.name !== "string") {
    return { status: 400, payload: { error: "a pet needs a name" } };
  }
  const tag = typeof body.tag === "string" ? body.tag : "";
  const quantity = typeof body.quantity === "number" ? body.quantity : 0;
  if (guardLt(recorder, "pet_quantity_negative", quantity, 0)) {
    throw new Error("inventory underflow: negative quantity");
  }
  const pet = store.insert(body.name, tag, quantity);
  if (guardStrEq(recorder, "pet_tag_magic", tag, "magic")) {
    return { status: 200, payload: { id: pet.id, magic: true } };
  }
  return { status: 200, payload: { id: pet.id } };
}

function getPet(store: PetStore, id: number): Reply {
  const pet = store.pets.get(id);
  if (pet === undefined) {
    return { status: 404, payload: { error: "no such pet" } };
  }
  return { status: 200, payload: pet };
}

function deletePet(store: PetStore, id: number): Reply {
  if (!store.pets.delete(id)) {
    return { status: 404, payload: { error: "no such pet" } };
  }
  return { status: 204, payload: null };
}

function listPets(store: PetStore): Reply {
  return { status: 200, payload: [...store.pets.values()] };
}

export function route(
  store: PetStore,
  recorder: CoverageRecorder,
  method: string,
  path: string,
  authorization: string | undefined,
  rawBody: string
): Reply {
  if (path === "/swagger.json" && method === "GET") {
    return { status: 200, payload: swaggerDoc() };
  }
  if (authorization !== API_KEY) {
    return { status: 401, payload: { error: "missing or wrong api key" } };
  }
  if (path === "/api/pets" && method === "POST") {
    return createPet(store, recorder, rawBody);
  }
  if (path === "/api/pets" && method === "GET") {
    return listPets(store);
  }
  const match = path.match(/^\/api\/pets\/(-?\d+)$/);
  if (match !== null && method === "GET") {
    return getPet(store, Number(match[1]));
  }
  if (match !== null && method === "DELETE") {
    return deletePet(store, Number(match[1]));
  }
  return { status: 404, payload: { error: "no such endpoint" } };
}

export function swaggerDoc(): object {
  return {
    swagger: "2.0",
    info: { title: "pet demo", version: "1.0" },
    basePath: "/api",
    paths: {
      "/pets": {
        post: {
          parameters: [
            {
              name: "body",
              in: "body",
              required: true,
              schema: {
                type: "object",
                properties: {
                  name: { type: "string", maxLength: 12 },
                  tag: { type: "string", maxLength: 8 },
                  quantity: { type: "integer", format: "int32" },
                },
              },
            },
          ],
          responses: {
            "200": {
              description: "created",
              schema: {
                type: "object",
                properties: { id: { type: "integer", format: "int64" } },
              },
            },
          },
        },
        get: { responses: { "200": { description: "all pets" } } },
      },
      "/pets/{id}": {
        get: {
          parameters: [
            { name: "id", in: "path", required: true, type: "integer", format: "int64" },
          ],
          responses: { "200": { description: "one pet" } },
        },
        delete: {
          parameters: [
            { name: "id", in: "path", required: true, type: "integer", format: "int64" },
          ],
          responses: { "204": { description: "removed" } },
        },
      },
    },
  };
}

export interface RunningApp {
  url: string;
  port: number;
  close(): Promise<void>;
}

export function startApp(
  store: PetStore,
  recorder: CoverageRecorder,
  port = 0,
  host = "127.0.0.1"
): Promise<RunningApp> {
  const server = createServer((req, res) => {
    const chunks: Buffer[] = [];
    req.on("data", (c) => chunks.push(c));
    req.on("end", () => {
      const raw = Buffer.concat(chunks).toString("utf8");
      const path = (req.url ?? "/").split("?")[0];
      let reply: Reply;
      try {
        reply = route(store, recorder, req.method ?? "GET", path, req.headers.authorization, raw);
      } catch (err) {
        const message = err instanceof Error ? err.message : String(err);
        reply = { status: 500, payload: { error: message } };
      }
      const text = reply.payload === null ? "" : JSON.stringify(reply.payload);
      res.writeHead(reply.status, {
        "Content-Type": "application/json",
        "Content-Length": Buffer.byteLength(text),
      });
      res.end(text);
    });
  });
  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, host, () => {
      const bound = (server.address() as AddressInfo).port;
      resolve({
        url: `http://${host}:${bound}`,
        port: bound,
        close: () =>
          new Promise<void>((done, fail) => {
            server.close((err) => (err ? fail(err) : done()));
            server.closeIdleConnections();
          }),
      });
    });
  });
}
