/**
 * Entry point: serve the demo driver.
 *
 *   node dist/src/demo/main.js [--port N]
 *
 * The recorder starts before anything of the demo app is imported, so its
 * lines are fully enumerated as coverage targets.
 */

import { serveController } from "../controller";
import { CoverageRecorder } from "../coverage";
import { DEMO_PREFIXES, DemoController } from "./controller";

async function main(): Promise<void> {
  const args = process.argv.slice(2);
  const portIndex = args.indexOf("--port");
  const port = portIndex >= 0 ? Number(args[portIndex + 1]) : 40100;
  const recorder = new CoverageRecorder(DEMO_PREFIXES);
  await recorder.start();
  const controller = new DemoController(recorder);
  const server = await serveController(controller, recorder, port);
  console.log(`demo driver listening at ${server.url}`);
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
