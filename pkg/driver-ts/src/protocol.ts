/**
 * Wire types of the JSON-over-HTTP control protocol, all paths under
 * /controller/:
 *
 *   GET  /controller/info
 *   POST /controller/sut     {"running": true|false}
 *   POST /controller/reset
 *   GET  /controller/targets?since=<marker>
 *
 * Any driver implementing these shapes bit-exactly interoperates with the
 * search core regardless of implementation language.
 */

export interface HeaderDto {
  name: string;
  value: string;
}

export interface AuthCredentialDto {
  label: string;
  headers: HeaderDto[];
}

export interface InfoDto {
  isSutRunning: boolean;
  baseUrlOfSut: string | null;
  swaggerJsonUrl: string;
  packagePrefixes: string;
  authInfo: AuthCredentialDto[];
}

export interface SutStateDto {
  running: boolean;
  baseUrlOfSut: string | null;
}

export type TargetKind = "statement" | "branch";

export interface TargetDto {
  id: string;
  kind: TargetKind;
  covered: boolean;
  /** present exactly when kind is "branch" and covered is false */
  distance?: number;
}

export interface CoverageDto {
  marker: string;
  targets: TargetDto[];
}
