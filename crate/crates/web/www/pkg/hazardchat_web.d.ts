/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * One chat turn against the scripted model; the full response with its trace.
     */
    ask(question: string): string;
    /**
     * Builds the graph from the embedded corpus. Panics only if the
     * embedded fixtures are broken.
     */
    constructor();
    /**
     * `{ok: true, columns, rows}` or `{ok: false, code, message, diagnostics}`.
     */
    run_query(cypher: string): string;
    /**
     * Schema text plus node and edge counts.
     */
    summary(): string;
}

/**
 * Checks `text` as an EC number if it has the `NNN-NNN-N` shape, otherwise as CAS.
 */
export function validate_identifier(text: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_ask: (a: number, b: number, c: number) => [number, number];
    readonly demo_new: () => number;
    readonly demo_run_query: (a: number, b: number, c: number) => [number, number];
    readonly demo_summary: (a: number) => [number, number];
    readonly validate_identifier: (a: number, b: number) => [number, number];
    readonly __externref_table_alloc: () => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
