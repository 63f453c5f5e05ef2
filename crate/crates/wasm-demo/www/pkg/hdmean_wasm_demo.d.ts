/* tslint:disable */
/* eslint-disable */

/**
 * Density and distribution function of the compound
 * symmetry limit for r = c/√p; a non-finite or negative `c` means fixed r.
 */
export function example1_curves(c: number, lo: number, hi: number, points: number): string;

/**
 * Weights of the geometric-spike law (ratio 1/2) and its density.
 */
export function geometric_weights(tau: number, lo: number, hi: number, points: number): string;

/**
 * Simulated T_{p,1} under compound symmetry r = c/√p (r = 1/2 for a
 * non-finite `c`), binned, next to the limit density, with their KS distance.
 */
export function simulate_tp1(n: number, p: number, c: number, reps: number, bins: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly example1_curves: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly geometric_weights: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly simulate_tp1: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
