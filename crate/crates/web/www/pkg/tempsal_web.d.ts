/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    frames(): number;
    /**
     * Mean per-frame BCE over the whole clip, `[conv, convlstm]`.
     */
    loss(): Float64Array;
    /**
     * Builds a `size`x`size` clip of `frames` frames whose ground truth runs
     * `lag` frames ahead of the noisy input.
     */
    constructor(seed: number, lag: number, size: number, frames: number, lr: number);
    /**
     * RGBA pixels of one frame. `layer` is one of `static`, `gt`, `conv`,
     * `convlstm`; fixations are drawn on top when `marks` is set.
     */
    render(layer: string, frame: number, marks: boolean): Uint8Array;
    /**
     * Clip-level scores of the static input and both models as a JSON
     * object `{layer: {metric: value | null}}`.
     */
    scores(): string;
    size(): number;
    steps(): number;
    /**
     * Runs `n` SGD steps on consecutive windows for both models and returns
     * the last window losses `[conv, convlstm]`, averaged per frame.
     */
    train(n: number): Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_frames: (a: number) => number;
    readonly demo_loss: (a: number) => [number, number, number, number];
    readonly demo_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly demo_render: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly demo_scores: (a: number) => [number, number, number, number];
    readonly demo_size: (a: number) => number;
    readonly demo_steps: (a: number) => number;
    readonly demo_train: (a: number, b: number) => [number, number, number, number];
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
