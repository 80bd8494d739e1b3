/* tslint:disable */
/* eslint-disable */

/**
 * A scene and its episodes, held between calls from the page.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    constructor(source: string, seed: number);
    run(index: number, memory_threshold: number): string;
    run_program(index: number, text: string): string;
    scene(): string;
}

export function check_program(text: string): string;

export function fixture_names(): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly check_program: (a: number, b: number) => [number, number];
    readonly demo_new: (a: number, b: number, c: number) => [number, number, number];
    readonly demo_run: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_run_program: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_scene: (a: number) => [number, number];
    readonly fixture_names: () => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
