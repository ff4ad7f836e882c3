/**
 * Coverage collection for the driver.
 *
 * Line coverage comes from V8 precise coverage via the in-process inspector
 * session: every `take` returns the functions executed since the previous
 * take (counters reset on take), which maps directly onto the protocol's
 * delta-with-marker semantics. Offsets are painted onto source lines,
 * smaller ranges overriding larger ones; a zero-count range starting
 * mid-line leaves that first line to its executed surroundings.
 *
 * Branch distances are *not* inferred from V8: handler guards call the
 * recorder explicitly (see instrument.ts), reporting how far a predicate
 * was from flipping.
 */

import { readFileSync } from "node:fs";
import { Session } from "node:inspector";
import { fileURLToPath } from "node:url";

import { CoverageDto, TargetDto } from "./protocol";

interface V8Range {
  startOffset: number;
  endOffset: number;
  count: number;
}

interface V8FunctionCoverage {
  functionName: string;
  ranges: V8Range[];
  isBlockCoverage: boolean;
}

export interface V8ScriptCoverage {
  scriptId: string;
  url: string;
  functions: V8FunctionCoverage[];
}

type TargetState = { kind: "statement" | "branch"; covered: boolean; distance: number | null };
type Batch = Map<string, TargetState>;

export type TakeFn = () => Promise<V8ScriptCoverage[]>;

/** Byte offset of each line start, for offset -> line translation. */
export function lineStarts(source: string): number[] {
  const starts = [0];
  for (let i = 0; i < source.length; i++) {
    if (source[i] === "\n") starts.push(i + 1);
  }
  return starts;
}

export function lineOfOffset(starts: number[], offset: number): number {
  let lo = 0;
  let hi = starts.length - 1;
  while (lo < hi) {
    const mid = (lo + hi + 1) >> 1;
    if (starts[mid] <= offset) lo = mid;
    else hi = mid - 1;
  }
  return lo + 1; // 1-based
}

/**
 * Paint executed-line counts for one script take.
 *
 * Returns the count per line touched by any reported range. The whole-file
 * anonymous entry (the module wrapper) is ignored; other functions paint
 * their ranges largest-first so inner zero-count blocks mask outer hits.
 */
export function paintLines(
  source: string,
  starts: number[],
  functions: V8FunctionCoverage[]
): Map<number, number> {
  const painted = new Map<number, number>();
  const ranges: V8Range[] = [];
  for (const fn of functions) {
    if (
      fn.functionName === "" &&
      fn.ranges.length > 0 &&
      fn.ranges[0].startOffset === 0 &&
      fn.ranges[0].endOffset >= source.length
    ) {
      continue; // module wrapper, not a handler
    }
    ranges.push(...fn.ranges);
  }
  ranges.sort((a, b) => b.endOffset - b.startOffset - (a.endOffset - a.startOffset));
  for (const range of ranges) {
    let first = lineOfOffset(starts, range.startOffset);
    const last = lineOfOffset(starts, Math.max(range.startOffset, range.endOffset - 1));
    if (range.count === 0 && range.startOffset > starts[first - 1]) {
      first += 1; // partial first line belongs to the executed outer code
    }
    for (let line = first; line <= last; line++) {
      painted.set(line, range.count);
    }
  }
  return painted;
}

function mergeInto(bucket: Batch, id: string, state: TargetState): void {
  const old = bucket.get(id);
  if (old === undefined) {
    bucket.set(id, { ...state });
    return;
  }
  if (old.covered || state.covered) {
    bucket.set(id, { kind: state.kind, covered: true, distance: null });
  } else {
    bucket.set(id, {
      kind: state.kind,
      covered: false,
      distance: Math.min(old.distance ?? Infinity, state.distance ?? Infinity),
    });
  }
}

export class CoverageRecorder {
  private prefixes: string[];
  private injectedTake: TakeFn | null;
  private session: Session | null = null;
  private sources = new Map<string, { text: string; starts: number[]; label: string }>();
  private knownLines = new Map<string, TargetState>();
  private lifetime: Batch = new Map();
  private batches: Batch[] = [];
  private guardRecords: Batch = new Map();

  /** `takeFn` substitutes the inspector in unit tests. */
  constructor(prefixes: string[], takeFn?: TakeFn) {
    this.prefixes = prefixes;
    this.injectedTake = takeFn ?? null;
  }

  /** Connect the inspector and start precise coverage (idempotent). */
  async start(): Promise<void> {
    if (this.session !== null || this.injectedTake !== null) return;
    this.session = new Session();
    this.session.connect();
    await this.post("Profiler.enable");
    await this.post("Profiler.startPreciseCoverage", { callCount: true, detailed: true });
  }

  /** Disconnect the inspector; the session otherwise pins the event loop. */
  stop(): void {
    if (this.session !== null) {
      this.session.disconnect();
      this.session = null;
    }
  }

  private post(method: string, params?: object): Promise<any> {
    return new Promise((resolve, reject) => {
      this.session!.post(method, params, (err, result) =>
        err ? reject(err) : resolve(result)
      );
    });
  }

  private async take(): Promise<V8ScriptCoverage[]> {
    if (this.injectedTake !== null) return this.injectedTake();
    await this.start();
    const res = await this.post("Profiler.takePreciseCoverage");
    return res.result as V8ScriptCoverage[];
  }

  private matches(url: string): boolean {
    return this.prefixes.some((p) => url.includes(p));
  }

  private sourceFor(url: string) {
    let entry = this.sources.get(url);
    if (entry === undefined) {
      const path = url.startsWith("file://") ? fileURLToPath(url) : url;
      const text = readFileSync(path, "utf8");
      const parts = path.split("/");
      const label = parts[parts.length - 1];
      entry = { text, starts: lineStarts(text), label };
      this.sources.set(url, entry);
    }
    return entry;
  }

  recordBranch(id: string, taken: boolean, distance: number): void {
    mergeInto(this.guardRecords, `Branch_${id}`, {
      kind: "branch",
      covered: taken,
      distance: taken ? null : distance,
    });
  }

  /** Fold one inspector take plus pending guard records into a sealed batch. */
  private async seal(): Promise<void> {
    const scripts = await this.take();
    const batch: Batch = new Map();
    for (const script of scripts) {
      if (!this.matches(script.url)) continue;
      const { text, starts, label } = this.sourceFor(script.url);
      const painted = paintLines(text, starts, script.functions);
      for (const [line, count] of painted) {
        const id = `Line_${label}:${line}`;
        if (!this.knownLines.has(id)) {
          this.knownLines.set(id, { kind: "statement", covered: false, distance: null });
        }
        if (count > 0) {
          batch.set(id, { kind: "statement", covered: true, distance: null });
        }
      }
    }
    for (const [id, state] of this.guardRecords) {
      mergeInto(batch, id, state);
    }
    this.guardRecords = new Map();
    for (const [id, state] of batch) {
      mergeInto(this.lifetime, id, state);
    }
    this.batches.push(batch);
  }

  /**
   * Protocol report: seal a batch, then answer for the given marker.
   * A marker from an earlier report yields everything sealed after it; an
   * unknown marker yields the full lifetime report including never-hit
   * lines, so totals are observable.
   */
  async report(since: string): Promise<CoverageDto> {
    await this.seal();
    const marker = String(this.batches.length);
    const index = /^\d+$/.test(since) ? Number(since) : -1;
    let merged: Batch;
    if (index < 0 || index > this.batches.length) {
      merged = new Map();
      for (const [id, state] of this.knownLines) merged.set(id, { ...state });
      for (const [id, state] of this.lifetime) mergeInto(merged, id, state);
    } else {
      merged = new Map();
      for (const batch of this.batches.slice(index)) {
        for (const [id, state] of batch) mergeInto(merged, id, state);
      }
    }
    const targets: TargetDto[] = [];
    for (const [id, state] of merged) {
      const dto: TargetDto = { id, kind: state.kind, covered: state.covered };
      if (state.kind === "branch" && !state.covered) {
        dto.distance = state.distance ?? 0;
      }
      targets.push(dto);
    }
    return { marker, targets };
  }
}
