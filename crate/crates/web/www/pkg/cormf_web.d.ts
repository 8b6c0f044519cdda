/* tslint:disable */
/* eslint-disable */

/**
 * A training run the page advances a few iterations per frame.
 */
export class Training {
    free(): void;
    [Symbol.dispose](): void;
    done(): boolean;
    constructor(name: string, seed: number, batch: number, iterations: number, hidden: number);
    /**
     * Run up to `count` iterations; returns the new history rows as JSON.
     */
    step(count: number): string;
    readonly exact: number | undefined;
}

export function catalog(): string;

export function curve(name: string, seed: number | null | undefined, points: number): string;

export function dataset(name: string, seed?: number | null): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_training_free: (a: number, b: number) => void;
    readonly catalog: () => [number, number];
    readonly curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly dataset: (a: number, b: number, c: number) => [number, number, number, number];
    readonly training_done: (a: number) => number;
    readonly training_exact: (a: number) => [number, number];
    readonly training_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly training_step: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
