/* tslint:disable */
/* eslint-disable */

/**
 * The two counterterms at cutoff `Λ` and Gross threshold `κ`.
 */
export function counterterm_pair(a_v: number, a_w: number, lambda_2pi: number, kappa_2pi: number): string;

/**
 * Partial sums of the Bogoliubov lattice sum at dyadic cutoffs
 * `c, 2c, 4c, …` (`count` of them), plus the summand on a radial grid.
 */
export function lhy_series(a_v: number, cutoff_2pi: number, count: number): string;

/**
 * Lowest `levels` eigenvalues of the cutoff Hamiltonian in the sector of
 * total momentum `(px, py, pz)`.
 */
export function sector_spectrum(a_v: number, a_w: number, lambda_2pi: number, n_max: number, px: number, py: number, pz: number, levels: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly counterterm_pair: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly lhy_series: (a: number, b: number, c: number) => [number, number, number, number];
    readonly sector_spectrum: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
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
