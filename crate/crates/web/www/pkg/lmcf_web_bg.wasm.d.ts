/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_curveflow_free: (a: number, b: number) => void;
export const __wbg_expander_free: (a: number, b: number) => void;
export const curveflow_advance: (a: number, b: number) => [number, number, number];
export const curveflow_area: (a: number) => number;
export const curveflow_circle: (a: number, b: number) => [number, number, number];
export const curveflow_closed: (a: number) => number;
export const curveflow_looped: (a: number, b: number) => [number, number, number];
export const curveflow_max_curvature: (a: number) => number;
export const curveflow_points: (a: number) => [number, number];
export const curveflow_time: (a: number) => number;
export const expander_asymptotic_angles: (a: number) => [number, number];
export const expander_new: (a: number, b: number, c: number) => [number, number, number];
export const expander_points: (a: number) => [number, number];
export const expander_residual: (a: number) => [number, number, number];
export const laplace_integral: (a: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
