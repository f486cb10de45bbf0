/* tslint:disable */
/* eslint-disable */

/**
 * One closed-loop run, decimated for plotting.
 */
export class Run {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    bump_active(): boolean;
    final_e(): number;
    h(): Float64Array;
    /**
     * Lower edge of the admissible set for `y1`.
     */
    lower(): Float64Array;
    min_h_after(): number;
    r(): Float64Array;
    /**
     * NaN when `h` never settles above `-0.01`.
     */
    rescue_time(): number;
    summary(): string;
    t(): Float64Array;
    u(): Float64Array;
    /**
     * Upper edge, NaN for the one-sided barrier.
     */
    upper(): Float64Array;
    y1(): Float64Array;
}

/**
 * `y, Psi(x, y), Phi(x, y)` for `y` on the kernel grid up to `x`, interleaved.
 */
export function kernel_slice(x: number, nodes: number): Float64Array;

/**
 * `sigma(t)` and its first derivative on `samples` points of `[0, t_end]`,
 * interleaved as `t, sigma, sigma'`.
 */
export function sigma_curve(h_bar: number, epsilon: number, t_a: number, tbar0: number, t_end: number, samples: number): Float64Array;

/**
 * Runs a case and keeps every `stride`-th record.
 */
export function simulate_case(_case: number, y10: number, k1: number, k2: number, controller: string, gains: string, t_end: number, stride: number): Run;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_run_free: (a: number, b: number) => void;
    readonly kernel_slice: (a: number, b: number) => [number, number, number, number];
    readonly run_bump_active: (a: number) => number;
    readonly run_final_e: (a: number) => number;
    readonly run_h: (a: number) => [number, number];
    readonly run_lower: (a: number) => [number, number];
    readonly run_min_h_after: (a: number) => number;
    readonly run_r: (a: number) => [number, number];
    readonly run_rescue_time: (a: number) => number;
    readonly run_summary: (a: number) => [number, number];
    readonly run_t: (a: number) => [number, number];
    readonly run_u: (a: number) => [number, number];
    readonly run_upper: (a: number) => [number, number];
    readonly run_y1: (a: number) => [number, number];
    readonly sigma_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly simulate_case: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
