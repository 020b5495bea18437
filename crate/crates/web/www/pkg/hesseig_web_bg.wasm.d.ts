/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_diskeigen_free: (a: number, b: number) => void;
export const __wbg_profile_free: (a: number, b: number) => void;
export const cone_map: (a: number, b: number, c: number) => [number, number];
export const disk_eigen: (a: number, b: number, c: number, d: number) => [number, number, number];
export const diskeigen_lambda: (a: number) => number;
export const diskeigen_nx: (a: number) => number;
export const diskeigen_ny: (a: number) => number;
export const diskeigen_values: (a: number) => [number, number];
export const profile_lambda1: (a: number) => number;
export const profile_r: (a: number) => [number, number];
export const profile_u: (a: number) => [number, number];
export const radial_profile: (a: number, b: number, c: number, d: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
