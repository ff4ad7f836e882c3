/**
 * Branch-distance decorators for handler guards.
 *
 * The SUT developer wraps comparison predicates in these helpers; each call
 * evaluates the predicate, reports how far it was from flipping to the
 * recorder, and returns the boolean, so guards read naturally:
 *
 *   if (guardNumEq(recorder, "quantity_is_zero", quantity, 0)) { ... }
 *
 * Distances follow the usual conventions: |a-b| for numeric equality,
 * a-b+1 for a<b, character distance plus a length penalty for strings.
 */

import { CoverageRecorder } from "./coverage";

export function guardNumEq(
  recorder: CoverageRecorder,
  id: string,
  actual: number,
  expected: number
): boolean {
  const taken = actual === expected;
  recorder.recordBranch(id, taken, Math.abs(actual - expected));
  return taken;
}

export function guardLt(
  recorder: CoverageRecorder,
  id: string,
  left: number,
  right: number
): boolean {
  const taken = left < right;
  recorder.recordBranch(id, taken, taken ? 0 : left - right + 1);
  return taken;
}

export function guardStrEq(
  recorder: CoverageRecorder,
  id: string,
  actual: string,
  expected: string
): boolean {
  const taken = actual === expected;
  recorder.recordBranch(id, taken, taken ? 0 : stringDistance(actual, expected));
  return taken;
}

export function stringDistance(a: string, b: string): number {
  const shared = Math.min(a.length, b.length);
  let d = 0;
  for (let i = 0; i < shared; i++) {
    d += Math.abs(a.charCodeAt(i) - b.charCodeAt(i));
  }
  return d + 128 * Math.abs(a.length - b.length);
}
