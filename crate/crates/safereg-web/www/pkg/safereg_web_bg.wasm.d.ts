/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_run_free: (a: number, b: number) => void;
export const kernel_slice: (a: number, b: number) => [number, number, number, number];
export const run_bump_active: (a: number) => number;
export const run_final_e: (a: number) => number;
export const run_h: (a: number) => [number, number];
export const run_lower: (a: number) => [number, number];
export const run_min_h_after: (a: number) => number;
export const run_r: (a: number) => [number, number];
export const run_rescue_time: (a: number) => number;
export const run_summary: (a: number) => [number, number];
export const run_t: (a: number) => [number, number];
export const run_u: (a: number) => [number, number];
export const run_upper: (a: number) => [number, number];
export const run_y1: (a: number) => [number, number];
export const sigma_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
export const simulate_case: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
