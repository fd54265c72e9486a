/* tslint:disable */
/* eslint-disable */

/**
 * An RGBA8 image plus a JSON description.
 */
export class Frame {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    info(): string;
    rgba(): Uint8Array;
    readonly height: number;
    readonly width: number;
}

/**
 * Baseline and occluded fairness at a threshold optimized on the baseline.
 * `severity` scales the synthetic occlusion effect; 0 means no effect.
 */
export function fairness_explorer(severity: number, alpha: number, seed: number): string;

export function foir_inspector(fraction: number, affinity: number, false_match: boolean, seed: number): Frame;

/**
 * One occluded demo face. The info lists the chosen categories and assets.
 */
export function occlusion_preview(protocol: number, seed: number): Frame;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_frame_free: (a: number, b: number) => void;
    readonly fairness_explorer: (a: number, b: number, c: number) => [number, number, number, number];
    readonly foir_inspector: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly frame_height: (a: number) => number;
    readonly frame_info: (a: number) => [number, number];
    readonly frame_rgba: (a: number) => [number, number];
    readonly frame_width: (a: number) => number;
    readonly occlusion_preview: (a: number, b: number) => [number, number, number];
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
