/* tslint:disable */
/* eslint-disable */

export class DiskEigen {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly lambda: number;
    readonly nx: number;
    readonly ny: number;
    /**
     * Row-major, NaN outside the disk.
     */
    readonly values: Float64Array;
}

export class Profile {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly lambda1: number;
    readonly r: Float64Array;
    readonly u: Float64Array;
}

/**
 * Largest k with (x, y, λ₃) ∈ Γ_k, on a res × res grid over [−extent, extent]², rows from the top.
 */
export function cone_map(lambda3: number, extent: number, res: number): Uint8Array;

export function disk_eigen(k: number, s: number, delta: number, cells: number): DiskEigen;

export function radial_profile(n: number, k: number, s: number, samples: number): Profile;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_diskeigen_free: (a: number, b: number) => void;
    readonly __wbg_profile_free: (a: number, b: number) => void;
    readonly cone_map: (a: number, b: number, c: number) => [number, number];
    readonly disk_eigen: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly diskeigen_lambda: (a: number) => number;
    readonly diskeigen_nx: (a: number) => number;
    readonly diskeigen_ny: (a: number) => number;
    readonly diskeigen_values: (a: number) => [number, number];
    readonly profile_lambda1: (a: number) => number;
    readonly profile_r: (a: number) => [number, number];
    readonly profile_u: (a: number) => [number, number];
    readonly radial_profile: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
