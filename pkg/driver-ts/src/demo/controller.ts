/**
 * DriverController wiring for the demo pet API.
 *
 * The app module is loaded lazily inside startSut so the coverage recorder
 * is already profiling when V8 compiles it; otherwise its functions would
 * not be enumerated as line targets.
 */

import { DriverController } from "../controller";
import { CoverageRecorder } from "../coverage";
import { AuthCredentialDto } from "../protocol";
import type { PetStore, RunningApp } from "./app";

export const DEMO_PREFIXES = ["demo/app.js"];

export class DemoController implements DriverController {
  packagePrefixes = DEMO_PREFIXES.join(",");
  private recorder: CoverageRecorder;
  private app: RunningApp | null = null;
  private store: PetStore | null = null;

  constructor(recorder: CoverageRecorder) {
    this.recorder = recorder;
  }

  async startSut(): Promise<string> {
    if (this.app !== null) {
      return this.app.url;
    }
    const mod = await import("./app");
    this.store = new mod.PetStore();
    this.app = await mod.startApp(this.store, this.recorder);
    return this.app.url;
  }

  async stopSut(): Promise<void> {
    if (this.app !== null) {
      await this.app.close();
      this.app = null;
    }
  }

  async resetStateOfSut(): Promise<void> {
    if (this.store === null) {
      throw new Error("SUT not started");
    }
    this.store.reset();
  }

  getUrlOfSwaggerJson(): string {
    if (this.app === null) {
      return "";
    }
    return `${this.app.url}/swagger.json`;
  }

  getInfoForAuthentication(): AuthCredentialDto[] {
    return [
      {
        label: "administrator",
        headers: [{ name: "Authorization", value: "ApiKey administrator" }],
      },
    ];
  }

  isSutRunning(): boolean {
    return this.app !== null;
  }
}
